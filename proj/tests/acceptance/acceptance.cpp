// Acceptance gate: one criterion per function, one PASS/FAIL line each.
// Run with no arguments for the full gate or with a criterion number (1-12)
// to run a single criterion (that is how ctest registers them).

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace acceptance {

bool criterion_1();
bool criterion_2();
bool criterion_3();
bool criterion_4();
bool criterion_5();
bool criterion_6();
bool criterion_7();
bool criterion_8();
bool criterion_9();
bool criterion_10();
bool criterion_11();
bool criterion_12();

struct Entry {
    int number;
    const char* title;
    bool (*fn)();
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        {1, "gradient suite: finite-difference checks on every differentiable op", criterion_1},
        {2, "decode oracle: 200 random maps equal the exhaustive per-cell scan", criterion_2},
        {3, "assignment and matching equal permutation brute force", criterion_3},
        {4, "bilinear sampler: cell centers, closed form, linearity", criterion_4},
        {5, "metric golden cases and permutation symmetry", criterion_5},
        {6, "end-to-end synthetic detection reaches F1 >= 0.95", criterion_6},
        {7, "joint baseline: classification converges slower than detection", criterion_7},
        {8, "decoupled pipeline beats or ties the joint baseline", criterion_8},
        {9, "detector capacity sweep: width-1 vs width-4 gap <= 2 points", criterion_9},
        {10, "small dataset gains from joint training with a larger one", criterion_10},
        {11, "probe hook emits a complete per-epoch trajectory", criterion_11},
        {12, "byte-identical reruns under identical config and seed", criterion_12},
    };
    return table;
}

}  // namespace acceptance

int main(int argc, char** argv) {
    using namespace acceptance;
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 12) {
            std::fprintf(stderr, "usage: %s [criterion 1-12]\n", argv[0]);
            return 2;
        }
    }
    int failures = 0;
    for (const auto& e : entries()) {
        if (only != 0 && e.number != only) continue;
        bool ok = false;
        try {
            ok = e.fn();
        } catch (const std::exception& ex) {
            std::printf("criterion %2d: FAIL — %s (exception: %s)\n", e.number, e.title,
                        ex.what());
            ++failures;
            continue;
        }
        std::printf("criterion %2d: %s — %s\n", e.number, ok ? "PASS" : "FAIL", e.title);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
