#pragma once

#include "bcm.hpp"
#include "degseq.hpp"
#include "error.hpp"
#include "explore.hpp"
#include "levy.hpp"
#include "mc.hpp"
#include "numeric.hpp"
#include "path.hpp"
#include "random.hpp"
#include "sizebias.hpp"
#include "stats.hpp"
#include "validate.hpp"
