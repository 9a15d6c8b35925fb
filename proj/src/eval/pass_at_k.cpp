#include "camp/evaluation.hpp"

namespace camp::eval {

double pass_at_k(int n, int c, int k) {
    if (n < 1) throw EvalError("pass@k: n must be at least 1");
    if (c < 0 || c > n) throw EvalError("pass@k: need 0 <= c <= n");
    if (k < 1 || k > n) throw EvalError("pass@k: need 1 <= k <= n");
    if (n - c < k) return 1.0;
    double miss = 1.0;
    for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
    return 1.0 - miss;
}

}  // namespace camp::eval
