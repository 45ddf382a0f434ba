#include "actracer/distance.hpp"

#include <algorithm>
#include <cmath>

#include "actracer/errors.hpp"
#include "actracer/rng.hpp"

namespace actracer {

std::string to_string(DistanceMetric m) { return m == DistanceMetric::KS ? "ks" : "wd"; }

DistanceMetric distance_from_string(const std::string& s) {
    if (s == "ks") return DistanceMetric::KS;
    if (s == "wd") return DistanceMetric::WD;
    throw UsageError("unknown distance metric '" + s + "' (expected ks|wd)");
}

namespace {

// Sorted sequence with one extra element spliced in at its sorted position.
struct SortedPlus {
    std::span<const double> base;
    double extra;
    std::size_t pos;

    explicit SortedPlus(std::span<const double> b, double e)
        : base(b), extra(e), pos(static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), e) - b.begin())) {}

    std::size_t size() const { return base.size() + 1; }
    double operator[](std::size_t i) const { return i < pos ? base[i] : (i == pos ? extra : base[i - 1]); }
};

template <typename SeqA, typename SeqB>
double ks_impl(const SeqA& a, const SeqB& b) {
    const std::size_t na = a.size(), nb = b.size();
    if (na == 0 || nb == 0) throw DataError("ks_statistic: empty sample");
    std::size_t i = 0, j = 0;
    double sup = 0.0;
    while (i < na || j < nb) {
        const double v = (i < na && (j >= nb || a[i] <= b[j])) ? a[i] : b[j];
        while (i < na && a[i] == v) ++i;
        while (j < nb && b[j] == v) ++j;
        const double diff = std::abs(static_cast<double>(i) / static_cast<double>(na) -
                                     static_cast<double>(j) / static_cast<double>(nb));
        if (diff > sup) sup = diff;
    }
    return sup;
}

template <typename SeqA, typename SeqB>
double w1_impl(const SeqA& a, const SeqB& b) {
    const std::size_t na = a.size(), nb = b.size();
    if (na == 0 || nb == 0) throw DataError("wasserstein1: empty sample");
    std::size_t i = 0, j = 0;
    double total = 0.0;
    double prev = std::min(a[0], b[0]);
    while (i < na || j < nb) {
        const double v = (i < na && (j >= nb || a[i] <= b[j])) ? a[i] : b[j];
        total += std::abs(static_cast<double>(i) / static_cast<double>(na) -
                          static_cast<double>(j) / static_cast<double>(nb)) *
                 (v - prev);
        prev = v;
        while (i < na && a[i] == v) ++i;
        while (j < nb && b[j] == v) ++j;
    }
    return total;
}

} // namespace

double ks_sorted(std::span<const double> a, std::span<const double> b) { return ks_impl(a, b); }
double wasserstein1_sorted(std::span<const double> a, std::span<const double> b) { return w1_impl(a, b); }

double ks_sorted_plus(std::span<const double> a, std::span<const double> b, double extra) {
    return ks_impl(a, SortedPlus(b, extra));
}

double wasserstein1_sorted_plus(std::span<const double> a, std::span<const double> b, double extra) {
    return w1_impl(a, SortedPlus(b, extra));
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return ks_impl(sa, sb);
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return w1_impl(sa, sb);
}

// Iterated GCM/LCM dip computation. Internally 1-based so count arithmetic
// matches the ECDF step heights directly; the returned value is the deviation
// in count units divided by 2n.
double dip_statistic(std::vector<double> values) {
    const std::size_t n = values.size();
    if (n < 4) throw DataError("dip_statistic: need at least 4 values");
    std::sort(values.begin(), values.end());

    std::vector<double> x(n + 1);
    for (std::size_t i = 0; i < n; ++i) x[i + 1] = values[i];
    if (x[1] == x[n]) return 0.5 / static_cast<double>(n); // point mass

    std::vector<int> mn(n + 2), mj(n + 2), gcm(n + 2), lcm(n + 2);
    int low = 1;
    int high = static_cast<int>(n);
    double dip = 1.0; // in units of 1/(2n)

    for (;;) {
        // GCM predecessor indices over [low, high].
        mn[low] = low;
        for (int j = low + 1; j <= high; ++j) {
            mn[j] = j - 1;
            for (;;) {
                const int mnj = mn[j];
                if (mnj == low) break;
                const int mnmnj = mn[mnj];
                if ((x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj)) break;
                mn[j] = mnmnj;
            }
        }
        // LCM successor indices over [low, high].
        mj[high] = high;
        for (int j = high - 1; j >= low; --j) {
            mj[j] = j + 1;
            for (;;) {
                const int mjj = mj[j];
                if (mjj == high) break;
                const int mjmjj = mj[mjj];
                if ((x[j] - x[mjj]) * (mjj - mjmjj) < (x[mjj] - x[mjmjj]) * (j - mjj)) break;
                mj[j] = mjmjj;
            }
        }

        // Change points of each fit, gcm from high down, lcm from low up.
        int l_gcm = 1;
        gcm[1] = high;
        while (gcm[l_gcm] > low) {
            gcm[l_gcm + 1] = mn[gcm[l_gcm]];
            ++l_gcm;
        }
        int ig = l_gcm;
        int ix = l_gcm - 1;

        int l_lcm = 1;
        lcm[1] = low;
        while (lcm[l_lcm] < high) {
            lcm[l_lcm + 1] = mj[lcm[l_lcm]];
            ++l_lcm;
        }
        int ih = l_lcm;
        int iv = 2;

        // Largest deviation between the two fits over [low, high].
        double d = 0.0;
        if (l_gcm != 2 || l_lcm != 2) {
            for (;;) {
                const int gcmix = gcm[ix];
                const int lcmiv = lcm[iv];
                double dx;
                if (gcmix > lcmiv) {
                    // Next change point along x comes from the LCM.
                    const int gcmi1 = gcm[ix + 1];
                    dx = (lcmiv - gcmi1 + 1) - (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) / (x[gcmix] - x[gcmi1]);
                    ++iv;
                    if (dx >= d) {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    // Next change point comes from the GCM.
                    const int lcmiv1 = lcm[iv - 1];
                    dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) / (x[lcmiv] - x[lcmiv1]) - (gcmix - lcmiv1 - 1);
                    --ix;
                    if (dx >= d) {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                if (ix < 1) ix = 1;
                if (iv > l_lcm) iv = l_lcm;
                if (gcm[ix] == lcm[iv]) break;
            }
        } else {
            d = 1.0;
        }
        if (d < dip) break;

        // Deviation of the ECDF above the GCM over its remaining segments.
        double dip_l = 0.0;
        for (int j = ig; j < l_gcm; ++j) {
            double max_t = 1.0;
            const int jb = gcm[j + 1];
            const int je = gcm[j];
            if (je - jb > 1 && x[je] != x[jb]) {
                const double c = (je - jb) / (x[je] - x[jb]);
                for (int jj = jb; jj <= je; ++jj) {
                    const double t = (jj - jb + 1) - (x[jj] - x[jb]) * c;
                    if (t > max_t) max_t = t;
                }
            }
            if (max_t > dip_l) dip_l = max_t;
        }
        // Deviation of the ECDF below the LCM.
        double dip_u = 0.0;
        for (int j = ih; j < l_lcm; ++j) {
            double max_t = 1.0;
            const int jb = lcm[j];
            const int je = lcm[j + 1];
            if (je - jb > 1 && x[je] != x[jb]) {
                const double c = (je - jb) / (x[je] - x[jb]);
                for (int jj = jb; jj <= je; ++jj) {
                    const double t = (x[jj] - x[jb]) * c - (jj - jb - 1);
                    if (t > max_t) max_t = t;
                }
            }
            if (max_t > dip_u) dip_u = max_t;
        }

        const double dipnew = std::max(dip_l, dip_u);
        if (dipnew > dip) dip = dipnew;

        if (low == gcm[ig] && high == lcm[ih]) break;
        low = gcm[ig];
        high = lcm[ih];
    }

    return dip / (2.0 * static_cast<double>(n));
}

DipNull::DipNull(std::size_t n, int replicates, std::uint64_t seed) {
    if (replicates < 100) throw DataError("dip null distribution: need at least 100 replicates");
    if (n < 4) throw DataError("dip null distribution: need n >= 4");
    dips_.resize(static_cast<std::size_t>(replicates));
    std::vector<double> sample(n);
    for (int r = 0; r < replicates; ++r) {
        Rng rng(derive_seed(seed, "dip_null", static_cast<std::uint64_t>(r)));
        for (double& v : sample) v = rng.next_unit();
        dips_[static_cast<std::size_t>(r)] = dip_statistic(sample);
    }
    std::sort(dips_.begin(), dips_.end());
}

double DipNull::pvalue(double statistic) const {
    const auto it = std::lower_bound(dips_.begin(), dips_.end(), statistic);
    return static_cast<double>(dips_.end() - it) / static_cast<double>(dips_.size());
}

double dip_pvalue(double statistic, std::size_t n, int replicates, std::uint64_t seed) {
    return DipNull(n, replicates, seed).pvalue(statistic);
}

DipResult dip_test(std::span<const double> values, int replicates, std::uint64_t seed) {
    DipResult r;
    r.n = values.size();
    r.replicates = replicates;
    r.statistic = dip_statistic(std::vector<double>(values.begin(), values.end()));
    r.p_value = dip_pvalue(r.statistic, values.size(), replicates, seed);
    return r;
}

DistanceMetric select_metric(std::span<const double> values, double alpha, int replicates, std::uint64_t seed) {
    if (values.empty()) throw DataError("select_metric: empty sample");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DataError("select_metric: alpha must be in [0,1)");
    if (values.size() < 4) return DistanceMetric::KS;
    const DipResult r = dip_test(values, replicates, seed);
    return r.p_value < alpha ? DistanceMetric::WD : DistanceMetric::KS;
}

} // namespace actracer
