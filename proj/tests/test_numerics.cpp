#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "moetrack/ops.hpp"
#include "moetrack/rng.hpp"

using namespace moetrack;

namespace {

std::vector<double> random_vec(Rng& rng, int n, double lo = -3.0, double hi = 3.0) {
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

} // namespace

TEST_CASE("softmax basics") {
    auto s = softmax(std::vector<double>{0.0, 0.0});
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[1] == doctest::Approx(0.5));

    // stability limit: no overflow at extreme logits
    s = softmax(std::vector<double>{1000.0, 0.0});
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::isfinite(s[0]));

    // oracle: direct e^x / sum e^x at 64-bit
    const double e2 = std::exp(2.0), e1 = std::exp(1.0);
    s = softmax(std::vector<double>{2.0, 1.0});
    CHECK(std::fabs(s[0] - e2 / (e2 + e1)) < 1e-12);
    CHECK(std::fabs(s[0] - 0.7311) < 1e-4);
    CHECK(std::fabs(s[1] - 0.2689) < 1e-4);

    CHECK_THROWS_AS(softmax(std::vector<double>{}), contract_error);
}

TEST_CASE("softmax sums to one across the logit range") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(16));
        std::vector<double> v(static_cast<size_t>(n));
        for (double& x : v) x = rng.uniform(-1e4, 1e4);
        const auto s = softmax(v);
        double sum = 0.0;
        for (double x : s) {
            // entries underflow to exactly 0 once logit gaps exceed ~745
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
            sum += x;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("gelu exact form") {
    CHECK(gelu_scalar(0.0) == 0.0);
    CHECK(gelu_scalar(12.0) == doctest::Approx(12.0).epsilon(1e-12));

    // oracle: x * Phi(x) with Phi from an independent erf evaluation
    const double phi1 = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
    CHECK(std::fabs(gelu_scalar(1.0) - 1.0 * phi1) < 1e-15);
    CHECK(std::fabs(gelu_scalar(1.0) - 0.8413) < 1e-4);

    // exact GELU is non-monotone: it falls to a single interior minimum near
    // x = -0.7518 and is nondecreasing to the right of it. Verify that shape
    // on the [-6, 6] grid instead of blanket monotonicity.
    int sign_changes = 0;
    double min_x = 0.0, min_v = 1e300;
    double prev = gelu_scalar(-6.0);
    bool was_decreasing = true;
    int violations_right_of_min = 0;
    for (double x = -6.0 + 1e-3; x <= 6.0; x += 1e-3) {
        const double cur = gelu_scalar(x);
        const bool decreasing = cur < prev;
        if (decreasing != was_decreasing) {
            ++sign_changes;
            was_decreasing = decreasing;
        }
        if (cur < min_v) {
            min_v = cur;
            min_x = x;
        }
        if (x > -0.75 && cur < prev - 1e-15) ++violations_right_of_min;
        prev = cur;
    }
    CHECK(sign_changes == 1);
    CHECK(violations_right_of_min == 0);
    CHECK(std::fabs(min_x - (-0.7518)) < 2e-3);
    CHECK(std::fabs(min_v - (-0.16997)) < 1e-4);
}

TEST_CASE("top_k_select") {
    CHECK(top_k_select(std::vector<double>{0.1, 0.9, 0.5, 0.5}, 2) == std::vector<int>{1, 2});
    CHECK(top_k_select(std::vector<double>{3.0, 1.0, 2.0}, 1) == std::vector<int>{0});
    CHECK(top_k_select(std::vector<double>{5.0, 1.0, 2.0}, 3) == std::vector<int>{0, 1, 2});
    CHECK_THROWS_AS(top_k_select(std::vector<double>{1.0}, 2), contract_error);
    CHECK_THROWS_AS(top_k_select(std::vector<double>{1.0}, 0), contract_error);
}

TEST_CASE("top_k_select equals full stable sort oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(12));
        // coarse values provoke ties
        std::vector<double> v(static_cast<size_t>(n));
        for (double& x : v) x = std::floor(rng.uniform(0.0, 5.0));
        const int k = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));

        std::vector<int> idx(static_cast<size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[static_cast<size_t>(a)] > v[static_cast<size_t>(b)]; });
        std::vector<int> expect(idx.begin(), idx.begin() + k);
        std::sort(expect.begin(), expect.end());

        CHECK(top_k_select(v, k) == expect);
    }
}

TEST_CASE("cosine") {
    const std::vector<double> u{2.0, 1.0, -1.0};
    CHECK(cosine(u, u) == doctest::Approx(1.0));
    CHECK(cosine(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 3.0}) ==
          doctest::Approx(0.0));
    // oracle: direct formula at 64-bit
    const double expect = 1.0 / std::sqrt(2.0);
    CHECK(std::fabs(cosine(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.0}) -
                    expect) < 1e-12);
    CHECK(std::fabs(expect - 0.7071) < 1e-4);
    CHECK_THROWS_AS(cosine(std::vector<double>{0.0, 0.0}, u), contract_error);
}

TEST_CASE("mse") {
    Mat a(2, 1);
    a.at(0, 0) = 1.0;
    a.at(1, 0) = 2.0;
    Mat b(2, 1);
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(Mat(3, 3, 1.0), Mat(3, 3, 0.0)) == doctest::Approx(1.0));
    CHECK(mse(a, b) == doctest::Approx(2.5));  // (1 + 4) / 2
    CHECK_THROWS_AS(mse(a, Mat(1, 2)), contract_error);
}

TEST_CASE("attention") {
    // single key/value row: output equals V replicated
    Mat q(3, 2, 0.5), k1(1, 2, 2.0), v1(1, 4);
    for (int j = 0; j < 4; ++j) v1.at(0, j) = j + 1.0;
    Mat out = attention(q, k1, v1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) CHECK(out.at(i, j) == doctest::Approx(v1.at(0, j)));

    // zero logits: column mean of V
    Mat q0(1, 2, 0.0), k2(2, 2, 1.0), v2(2, 3);
    v2.at(0, 0) = 2.0;
    v2.at(1, 0) = 4.0;
    v2.at(0, 1) = -1.0;
    v2.at(1, 1) = 1.0;
    Mat q0out = attention(q0, k2, v2);
    CHECK(q0out.at(0, 0) == doctest::Approx(3.0));
    CHECK(q0out.at(0, 1) == doctest::Approx(0.0));

    // hand case: softmax([1/sqrt(2), 0]) * V
    Mat qq(1, 2), kk(2, 2), vv(2, 2);
    qq.at(0, 0) = 1.0;
    kk.at(0, 0) = 1.0;
    kk.at(1, 1) = 1.0;
    vv.at(0, 0) = 1.0;
    vv.at(1, 1) = 1.0;
    Mat h = attention(qq, kk, vv);
    const double w0 = std::exp(1.0 / std::sqrt(2.0)) / (std::exp(1.0 / std::sqrt(2.0)) + 1.0);
    CHECK(std::fabs(h.at(0, 0) - w0) < 1e-12);
    CHECK(std::fabs(h.at(0, 0) - 0.6698) < 1e-3);
    CHECK(std::fabs(h.at(0, 1) - 0.3302) < 1e-3);

    CHECK_THROWS_AS(attention(Mat(1, 2), Mat(2, 3), Mat(2, 2)), contract_error);
    CHECK_THROWS_AS(attention(Mat(1, 2), Mat(2, 2), Mat(3, 2)), contract_error);
}

TEST_CASE("attention rows are convex combinations of V rows") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int nq = 1 + static_cast<int>(rng.uniform_int(4));
        const int nk = 1 + static_cast<int>(rng.uniform_int(5));
        const int d = 1 + static_cast<int>(rng.uniform_int(6));
        const int dv = 1 + static_cast<int>(rng.uniform_int(6));
        Mat q(nq, d), k(nk, d), v(nk, dv);
        for (double& x : q.d) x = rng.normal();
        for (double& x : k.d) x = rng.normal();
        for (double& x : v.d) x = rng.normal();
        const Mat out = attention(q, k, v);
        for (int j = 0; j < dv; ++j) {
            double lo = v.at(0, j), hi = v.at(0, j);
            for (int r = 1; r < nk; ++r) {
                lo = std::min(lo, v.at(r, j));
                hi = std::max(hi, v.at(r, j));
            }
            for (int i = 0; i < nq; ++i) {
                CHECK(out.at(i, j) >= lo - 1e-12);
                CHECK(out.at(i, j) <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("operations are bit-deterministic") {
    Rng rng(99);
    const auto v = random_vec(rng, 9);
    const auto s1 = softmax(v);
    const auto s2 = softmax(v);
    CHECK(s1 == s2);
    Mat q(3, 4), k(5, 4), vv(5, 2);
    for (double& x : q.d) x = rng.normal();
    for (double& x : k.d) x = rng.normal();
    for (double& x : vv.d) x = rng.normal();
    const Mat a1 = attention(q, k, vv);
    const Mat a2 = attention(q, k, vv);
    CHECK(a1.d == a2.d);
}

TEST_CASE("sparse_gate contract") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const int e = 2 + static_cast<int>(rng.uniform_int(6));
        const int k = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(e)));
        const auto g = sparse_gate(random_vec(rng, e), k);
        CHECK(static_cast<int>(g.active.size()) == k);
        double sum = 0.0;
        for (double w : g.weights) {
            CHECK(w > 0.0);
            sum += w;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-6);
        // inactive weights are exactly zero by construction
        for (int i = 0; i < e; ++i) {
            const bool active = std::find(g.active.begin(), g.active.end(), i) != g.active.end();
            if (!active) CHECK(g.weight_of(i) == 0.0);
        }
    }
}

TEST_CASE("rng streams are deterministic and distinct") {
    Rng a = Rng::stream(42, 1);
    Rng b = Rng::stream(42, 1);
    Rng c = Rng::stream(42, 2);
    for (int i = 0; i < 100; ++i) {
        const uint64_t x = a.next_u64();
        CHECK(x == b.next_u64());
    }
    bool differs = false;
    Rng a2 = Rng::stream(42, 1);
    for (int i = 0; i < 100; ++i) differs = differs || (a2.next_u64() != c.next_u64());
    CHECK(differs);

    // binomial sanity for uniform01
    Rng u(1234);
    int heads = 0;
    for (int i = 0; i < 10000; ++i) heads += u.uniform01() < 0.5 ? 1 : 0;
    CHECK(heads > 4700);
    CHECK(heads < 5300);
}
