#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <bcmlab/validate.hpp>

int main(int argc, char** argv) {
    using namespace bcmlab;
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty())
        for (int i = 1; i <= check_count; ++i) ids.push_back(i);
    validation_options opt;
    if (const char* t = std::getenv("BCM_LAB_THREADS")) opt.threads = static_cast<unsigned>(std::atoi(t));
    bool all = true;
    for (int id : ids) {
        if (id < 1 || id > check_count) {
            std::cerr << "unknown criterion " << id << '\n';
            return 2;
        }
        const auto r = run_check(id, opt);
        std::cout << format_result(r) << std::endl;
        all = all && r.pass;
    }
    return all ? 0 : 1;
}
