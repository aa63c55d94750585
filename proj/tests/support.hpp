#pragma once

#include <bcmlab/validate.hpp>
