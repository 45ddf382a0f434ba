#include "actracer/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

#include "actracer/errors.hpp"
#include "actracer/rng.hpp"

namespace actracer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slot bookkeeping for one cluster in the auction: per-slot price and owner,
// plus a lazy min-heap over (price, slot). Stale heap entries are detected by
// comparing against the live price (prices strictly increase per bid).
struct ClusterSlots {
    std::vector<double> price;
    std::vector<int> owner;
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, std::greater<>> heap;
    int min1 = -1;
    double min1_price = 0.0;
    double min2_price = kInf;

    void init(int capacity) {
        price.assign(static_cast<std::size_t>(capacity), 0.0);
        owner.assign(static_cast<std::size_t>(capacity), -1);
        rebuild();
    }

    void rebuild() {
        heap = {};
        for (std::size_t s = 0; s < price.size(); ++s) heap.emplace(price[s], static_cast<int>(s));
        refresh_mins();
    }

    void set_price(int slot, double p) {
        price[static_cast<std::size_t>(slot)] = p;
        heap.emplace(p, slot);
        refresh_mins();
    }

    void refresh_mins() {
        // Drop stale entries, then read the two cheapest live slots.
        auto pop_stale = [&]() {
            while (!heap.empty() && heap.top().first != price[static_cast<std::size_t>(heap.top().second)])
                heap.pop();
        };
        pop_stale();
        min1 = heap.top().second;
        min1_price = heap.top().first;
        const auto top = heap.top();
        heap.pop();
        pop_stale();
        min2_price = heap.empty() ? kInf : heap.top().first;
        heap.push(top);
    }
};

void fill_by_index(std::vector<int>& out, const std::vector<int>& capacities) {
    int j = 0;
    int left = capacities[0];
    for (int& a : out) {
        while (left == 0) left = capacities[static_cast<std::size_t>(++j)];
        a = j;
        --left;
    }
}

} // namespace

std::vector<int> balanced_assign(const Eigen::MatrixXd& cost, const std::vector<int>& capacities) {
    const int n = static_cast<int>(cost.rows());
    const int k = static_cast<int>(cost.cols());
    if (static_cast<int>(capacities.size()) != k) throw DataError("balanced_assign: capacity count does not match clusters");
    long long total = 0;
    for (int c : capacities) {
        if (c <= 0) throw DataError("balanced_assign: capacities must be positive");
        total += c;
    }
    if (total != n) throw DataError("balanced_assign: infeasible capacities (sum != number of points)");
    if (!cost.allFinite()) throw DataError("balanced_assign: non-finite cost entries");

    std::vector<int> result(static_cast<std::size_t>(n), 0);
    if (k == 1) return result;
    if (cost.maxCoeff() == cost.minCoeff()) {
        // Every assignment has identical cost; fill clusters in index order.
        fill_by_index(result, capacities);
        return result;
    }

    // Row-major copy keeps the per-person scan cache friendly.
    std::vector<double> c(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) c[static_cast<std::size_t>(i) * k + j] = cost(i, j);

    const double scale = cost.cwiseAbs().maxCoeff();
    const double terminal = scale / static_cast<double>(n + 1);
    // Extra scaling passes below the terminal scale; with real-valued costs
    // the assignment only settles on the exact optimum once epsilon drops
    // well under the smallest cost gap.
    const double polish = scale * 1e-9;

    std::vector<ClusterSlots> slots(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) slots[static_cast<std::size_t>(j)].init(capacities[static_cast<std::size_t>(j)]);

    std::vector<int> person_cluster(static_cast<std::size_t>(n), -1);
    std::vector<int> person_slot(static_cast<std::size_t>(n), -1);
    std::deque<int> pending;

    auto run_phase = [&](double eps) {
        while (!pending.empty()) {
            const int i = pending.front();
            pending.pop_front();
            const double* ci = &c[static_cast<std::size_t>(i) * k];

            int bestj = -1;
            double v1 = -kInf, v2 = -kInf;
            for (int j = 0; j < k; ++j) {
                const double v = -ci[j] - slots[static_cast<std::size_t>(j)].min1_price;
                if (v > v1) {
                    v2 = v1;
                    v1 = v;
                    bestj = j;
                } else if (v > v2) {
                    v2 = v;
                }
            }
            ClusterSlots& cl = slots[static_cast<std::size_t>(bestj)];
            if (cl.min2_price < kInf) {
                const double vin = -ci[bestj] - cl.min2_price;
                if (vin > v2) v2 = vin;
            }
            if (v2 == -kInf) v2 = v1;

            const int s = cl.min1;
            const double new_price = -ci[bestj] - v2 + eps;
            const int evicted = cl.owner[static_cast<std::size_t>(s)];
            if (evicted >= 0) {
                person_cluster[static_cast<std::size_t>(evicted)] = -1;
                person_slot[static_cast<std::size_t>(evicted)] = -1;
                pending.push_back(evicted);
            }
            cl.owner[static_cast<std::size_t>(s)] = i;
            person_cluster[static_cast<std::size_t>(i)] = bestj;
            person_slot[static_cast<std::size_t>(i)] = s;
            cl.set_price(s, new_price);
        }
    };

    bool first = true;
    double eps = scale / 8.0;
    for (;;) {
        if (first) {
            for (int i = 0; i < n; ++i) pending.push_back(i);
            first = false;
        } else {
            // Keep slot holders that still satisfy eps-complementary
            // slackness at the new scale; release the rest.
            std::vector<int> violators;
            for (int i = 0; i < n; ++i) {
                const double* ci = &c[static_cast<std::size_t>(i) * k];
                const int jc = person_cluster[static_cast<std::size_t>(i)];
                const double own =
                    -ci[jc] - slots[static_cast<std::size_t>(jc)].price[static_cast<std::size_t>(person_slot[static_cast<std::size_t>(i)])];
                double best = -kInf;
                for (int j = 0; j < k; ++j) best = std::max(best, -ci[j] - slots[static_cast<std::size_t>(j)].min1_price);
                if (own < best - eps) violators.push_back(i);
            }
            for (int i : violators) {
                ClusterSlots& cl = slots[static_cast<std::size_t>(person_cluster[static_cast<std::size_t>(i)])];
                cl.owner[static_cast<std::size_t>(person_slot[static_cast<std::size_t>(i)])] = -1;
                person_cluster[static_cast<std::size_t>(i)] = -1;
                person_slot[static_cast<std::size_t>(i)] = -1;
                pending.push_back(i);
            }
        }
        run_phase(eps);
        if (eps < terminal && eps <= polish) break;
        eps /= 4.0;
    }

    for (int i = 0; i < n; ++i) result[static_cast<std::size_t>(i)] = person_cluster[static_cast<std::size_t>(i)];
    return result;
}

namespace {

Eigen::MatrixXd squared_distances(const FeatureMatrix& features, const Eigen::MatrixXd& centers) {
    Eigen::MatrixXd sq = -2.0 * (features * centers.transpose());
    sq.colwise() += features.rowwise().squaredNorm();
    sq.rowwise() += centers.rowwise().squaredNorm().transpose();
    return sq.cwiseMax(0.0);
}

Eigen::MatrixXd kmeanspp_init(const FeatureMatrix& features, int k, Rng& rng) {
    const Eigen::Index n = features.rows();
    Eigen::MatrixXd centers(k, features.cols());
    std::vector<bool> used(static_cast<std::size_t>(n), false);

    const auto first = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    centers.row(0) = features.row(first);
    used[static_cast<std::size_t>(first)] = true;

    Eigen::VectorXd mindist = (features.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int ci = 1; ci < k; ++ci) {
        const double total = mindist.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double r = rng.next_unit() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += mindist(i);
                if (acc > r) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = n - 1;
        }
        if (pick < 0 || used[static_cast<std::size_t>(pick)]) {
            // All remaining mass sits on chosen points (duplicates); take the
            // next unused index deterministically offset by the rng.
            std::vector<Eigen::Index> free;
            for (Eigen::Index i = 0; i < n; ++i)
                if (!used[static_cast<std::size_t>(i)]) free.push_back(i);
            pick = free[static_cast<std::size_t>(rng.next_below(free.size()))];
        }
        used[static_cast<std::size_t>(pick)] = true;
        centers.row(ci) = features.row(pick);
        mindist = mindist.cwiseMin((features.rowwise() - centers.row(ci)).rowwise().squaredNorm());
    }
    return centers;
}

Partition lloyd_fit(const FeatureMatrix& features, int k, std::uint64_t seed, int max_iter) {
    const Eigen::Index n = features.rows();
    Rng rng(seed);

    std::vector<int> capacities(static_cast<std::size_t>(k));
    const int base = static_cast<int>(n) / k;
    const int extra = static_cast<int>(n) % k;
    for (int j = 0; j < k; ++j) capacities[static_cast<std::size_t>(j)] = base + (j < extra ? 1 : 0);

    Eigen::MatrixXd centers = kmeanspp_init(features, k, rng);
    std::vector<int> assign;
    double objective = kInf;

    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::MatrixXd sq = squared_distances(features, centers);
        std::vector<int> new_assign = balanced_assign(sq, capacities);
        KahanSum obj;
        for (Eigen::Index i = 0; i < n; ++i) obj.add(sq(i, new_assign[static_cast<std::size_t>(i)]));
        const double new_objective = obj.value();
        if (new_objective > objective) break; // auction slack guard: never accept a worse step
        const bool fixed_point = (new_assign == assign);
        assign = std::move(new_assign);
        objective = new_objective;
        if (fixed_point) break;

        Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, features.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            means.row(assign[static_cast<std::size_t>(i)]) += features.row(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (int j = 0; j < k; ++j) means.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);

        KahanSum obj2;
        for (Eigen::Index i = 0; i < n; ++i)
            obj2.add((features.row(i) - means.row(assign[static_cast<std::size_t>(i)])).squaredNorm());
        if (obj2.value() > objective) break;
        centers = std::move(means);
        objective = obj2.value();
    }

    Partition p;
    p.k = k;
    p.assignments = std::move(assign);
    p.centers = std::move(centers);
    p.objective = objective;
    return p;
}

} // namespace

Partition balanced_kmeans(const FeatureMatrix& features, int k, std::uint64_t seed, int max_iter) {
    const Eigen::Index n = features.rows();
    if (n == 0) throw DataError("balanced_kmeans: empty features");
    if (k < 1) throw DataError("balanced_kmeans: k must be positive");
    if (k > n) throw DataError("balanced_kmeans: k exceeds number of points");
    if (!features.allFinite()) throw DataError("balanced_kmeans: non-finite features");
    if (max_iter < 1) throw DataError("balanced_kmeans: max_iter must be positive");

    // Small instances get multi-start refinement; the tiny fits are where a
    // single seeding can miss the enumeration optimum.
    const int restarts = n <= 64 ? 10 : 1;
    Partition best;
    best.objective = kInf;
    for (int r = 0; r < restarts; ++r) {
        Partition p = lloyd_fit(features, k, derive_seed(seed, "kmeans", static_cast<std::uint64_t>(r)), max_iter);
        if (p.objective < best.objective) best = std::move(p);
    }
    return best;
}

double inertia(const FeatureMatrix& features, const Eigen::MatrixXd& centers) {
    if (features.cols() != centers.cols()) throw DataError("inertia: dimension mismatch");
    const Eigen::MatrixXd sq = squared_distances(features, centers);
    KahanSum sum;
    for (Eigen::Index i = 0; i < sq.rows(); ++i) sum.add(sq.row(i).minCoeff());
    return sum.value();
}

void SearchHistory::add(int cluster_count, double inertia_value) {
    auto it = std::lower_bound(evaluated.begin(), evaluated.end(), cluster_count,
                               [](const auto& p, int c) { return p.first < c; });
    if (it != evaluated.end() && it->first == cluster_count) return;
    evaluated.insert(it, {cluster_count, inertia_value});
}

bool SearchHistory::contains(int cluster_count) const {
    return std::any_of(evaluated.begin(), evaluated.end(), [&](const auto& p) { return p.first == cluster_count; });
}

std::optional<int> adaptive_next(const SearchHistory& history) {
    const auto& pts = history.evaluated;
    if (pts.size() < 2) throw DataError("adaptive_next: need at least two evaluated counts");

    const double xrange = static_cast<double>(pts.back().first - pts.front().first);
    double ymin = kInf, ymax = -kInf;
    for (const auto& [c, y] : pts) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    const double yrange = ymax - ymin;

    int best = -1;
    double best_loss = -kInf;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1].first - pts[i].first <= 1) continue;
        const double dx = static_cast<double>(pts[i + 1].first - pts[i].first) / xrange;
        const double dy = yrange > 0.0 ? (pts[i + 1].second - pts[i].second) / yrange : 0.0;
        const double loss = std::sqrt(dx * dx + dy * dy);
        if (loss > best_loss) {
            best_loss = loss;
            best = static_cast<int>(i);
        }
    }
    if (best < 0) return std::nullopt;
    return (pts[static_cast<std::size_t>(best)].first + pts[static_cast<std::size_t>(best) + 1].first) / 2;
}

std::optional<int> find_elbow(const SearchHistory& history) {
    const auto& pts = history.evaluated;
    const std::size_t m = pts.size();
    if (m < 3) return std::nullopt;

    // Isotonic cleanup: seeded fits can produce local bumps; replace any
    // value above its left neighbor with the running minimum.
    std::vector<double> y(m);
    y[0] = pts[0].second;
    for (std::size_t i = 1; i < m; ++i) y[i] = std::min(y[i - 1], pts[i].second);

    const double x0 = pts.front().first;
    const double xrange = static_cast<double>(pts.back().first) - x0;
    double ymin = kInf, ymax = -kInf;
    for (double v : y) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    if (!(xrange > 0.0) || !(ymax > ymin)) return std::nullopt;

    // Convex-decreasing curve -> concave increasing, then the difference
    // curve against the diagonal.
    std::vector<double> xn(m), d(m);
    for (std::size_t i = 0; i < m; ++i) {
        xn[i] = (static_cast<double>(pts[i].first) - x0) / xrange;
        const double yt = (ymax - y[i]) / (ymax - ymin);
        d[i] = yt - xn[i];
    }

    std::vector<std::size_t> maxima, minima;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (d[i] >= d[i - 1] && d[i] >= d[i + 1]) maxima.push_back(i);
        if (d[i] <= d[i - 1] && d[i] <= d[i + 1]) minima.push_back(i);
    }
    if (maxima.empty()) return std::nullopt;

    const double sensitivity_step = 1.0 / static_cast<double>(m - 1); // S = 1
    std::size_t next_max = 0, next_min = 0;
    double threshold = 0.0;
    std::size_t threshold_index = 0;
    bool armed = false;
    for (std::size_t i = maxima.front(); i + 1 < m; ++i) {
        if (next_max < maxima.size() && maxima[next_max] == i) {
            threshold = d[i] - sensitivity_step;
            threshold_index = i;
            armed = true;
            ++next_max;
        }
        if (next_min < minima.size() && minima[next_min] == i) {
            threshold = 0.0;
            ++next_min;
        }
        if (armed && d[i + 1] < threshold) return pts[threshold_index].first;
    }
    return std::nullopt;
}

int clusearch(const FeatureMatrix& features, int w, int lb, int ub, std::uint64_t seed, SearchHistory* history_out) {
    const int n = static_cast<int>(features.rows());
    if (!(2 <= lb && lb < ub && ub <= n)) throw DataError("clusearch: need 2 <= lb < ub <= D");
    if (w < 3) throw DataError("clusearch: search budget must be at least 3");

    SearchHistory history;
    history.lb = lb;
    history.ub = ub;

    std::uint64_t eval_idx = 0;
    auto evaluate = [&](int count) {
        if (history.contains(count)) return;
        Partition p = balanced_kmeans(features, count, derive_seed(seed, "clusearch", eval_idx++));
        history.add(count, inertia(features, p.centers));
    };

    evaluate(lb);
    evaluate((lb + ub) / 2);
    evaluate(ub);
    while (static_cast<int>(history.evaluated.size()) < w) {
        const auto next = adaptive_next(history);
        if (!next) break;
        evaluate(*next);
    }

    if (history_out) *history_out = history;
    const auto elbow = find_elbow(history);
    return elbow.value_or(lb);
}

} // namespace actracer
