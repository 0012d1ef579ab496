// SPDX-License-Identifier: MIT
#include "attnopt/ann.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>

namespace attnopt {

namespace {

thread_local std::size_t g_last_visited = 0;

struct Scored {
    double ip;
    int id;
    // Better-first order: larger inner product, then smaller id.
    bool operator<(const Scored& o) const { return ip != o.ip ? ip > o.ip : id < o.id; }
};

}  // namespace

std::string_view to_string(AnnBackend b) {
    return b == AnnBackend::Exact ? "exact" : "lifted-tree";
}

AnnBackend parse_ann_backend(std::string_view name) {
    if (name == "exact") return AnnBackend::Exact;
    if (name == "lifted-tree" || name == "tree") return AnnBackend::LiftedTree;
    throw ValidationError(fmt::format("unknown ANN backend '{}'", name));
}

double SphereLift::inner_product(int i) const {
    const double dist2 = (query - points.row(i).transpose()).squaredNorm();
    return 0.5 * v_max * u_norm * (2.0 - dist2);
}

SphereLift lift_to_sphere(const Mat& points, const Vec& query) {
    SphereLift out;
    out.v_max = points.rows() ? points.rowwise().norm().maxCoeff() : 0.0;
    out.u_norm = query.norm();
    if (!(out.v_max > 0.0)) throw ValidationError("lift: zero point set");
    if (!(out.u_norm > 0.0)) throw ValidationError("lift: zero query");
    const Eigen::Index d = points.cols();
    out.points.resize(points.rows(), d + 1);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double sq = points.row(i).squaredNorm();
        out.points(i, 0) = std::sqrt(std::max(out.v_max * out.v_max - sq, 0.0)) / out.v_max;
        out.points.row(i).tail(d) = points.row(i) / out.v_max;
    }
    out.query.resize(d + 1);
    out.query(0) = 0.0;
    out.query.tail(d) = query / out.u_norm;
    return out;
}

struct AnnIndex::Tree {
    struct Node {
        Vec dir;
        double split = 0.0;
        int left = -1;
        int right = -1;
        std::vector<int> rows;  // leaf payload: row indices into points_
    };
    Mat lifted;
    std::vector<Node> nodes;

    int build(std::vector<int> rows, Rng& rng, int leaf_size) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (static_cast<int>(rows.size()) <= leaf_size) {
            nodes[id].rows = std::move(rows);
            return id;
        }
        Vec dir(lifted.cols());
        for (Eigen::Index c = 0; c < dir.size(); ++c) dir(c) = rng.normal();
        dir.normalize();
        std::vector<std::pair<double, int>> proj;
        proj.reserve(rows.size());
        for (int r : rows) proj.emplace_back(lifted.row(r).dot(dir), r);
        std::sort(proj.begin(), proj.end());
        const std::size_t half = proj.size() / 2;
        const double split = 0.5 * (proj[half - 1].first + proj[half].first);
        std::vector<int> lo, hi;
        for (std::size_t a = 0; a < proj.size(); ++a) (a < half ? lo : hi).push_back(proj[a].second);
        nodes[id].dir = dir;
        nodes[id].split = split;
        const int l = build(std::move(lo), rng, leaf_size);
        const int h = build(std::move(hi), rng, leaf_size);
        nodes[id].left = l;
        nodes[id].right = h;
        return id;
    }
};

AnnIndex::AnnIndex(Mat points, std::vector<int> ids, AnnBackend backend, std::uint64_t seed,
                   int leaf_size)
    : points_(std::move(points)), ids_(std::move(ids)), backend_(backend) {
    if (static_cast<Eigen::Index>(ids_.size()) != points_.rows())
        throw ValidationError("ANN index: id count differs from point count");
    {
        auto sorted = ids_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ValidationError("ANN index: duplicate ids");
    }
    v_max_ = points_.rows() ? points_.rowwise().norm().maxCoeff() : 0.0;
    if (backend_ == AnnBackend::LiftedTree && v_max_ > 0.0) {
        tree_ = std::make_unique<Tree>();
        tree_->lifted = lift_to_sphere(points_, Vec::Ones(points_.cols())).points;
        std::vector<int> rows(points_.rows());
        std::iota(rows.begin(), rows.end(), 0);
        Rng rng(seed);
        tree_->build(std::move(rows), rng, std::max(1, leaf_size));
    }
}

AnnIndex::~AnnIndex() = default;
AnnIndex::AnnIndex(AnnIndex&&) noexcept = default;
AnnIndex& AnnIndex::operator=(AnnIndex&&) noexcept = default;

std::size_t AnnIndex::last_visited() { return g_last_visited; }

std::vector<int> exact_top_k(const Mat& points, const std::vector<int>& ids, const Vec& u, int k) {
    std::vector<Scored> all;
    all.reserve(ids.size());
    for (std::size_t r = 0; r < ids.size(); ++r)
        all.push_back({points.row(static_cast<Eigen::Index>(r)).dot(u), ids[r]});
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<long>(kk), all.end());
    std::vector<int> out;
    for (std::size_t a = 0; a < kk; ++a) out.push_back(all[a].id);
    return out;
}

std::vector<int> AnnIndex::query(const Vec& u, int k, double eps) const {
    if (k < 0 || k > size()) throw ValidationError(fmt::format("k = {} exceeds index size {}", k, size()));
    if (eps < 0) throw ValidationError("negative ANN slack");
    const double u_norm = u.norm();
    if (backend_ == AnnBackend::Exact || !tree_ || !(u_norm > 0.0)) {
        g_last_visited = ids_.size();
        return exact_top_k(points_, ids_, u, k);
    }
    if (k == 0) return {};
    const double scale = 0.5 * v_max_ * u_norm;
    Vec q(points_.cols() + 1);
    q(0) = 0.0;
    q.tail(points_.cols()) = u / u_norm;

    std::priority_queue<Scored> best;  // top() is the worst kept
    auto worst_ip = [&] { return best.top().ip; };
    using Pending = std::pair<double, int>;  // (lower bound on squared lifted distance, node)
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> open;
    open.emplace(0.0, 0);
    std::size_t visited = 0;
    while (!open.empty()) {
        const auto [lb, node_id] = open.top();
        open.pop();
        if (static_cast<int>(best.size()) == k && scale * (2.0 - lb) <= worst_ip() + eps) break;
        const auto& node = tree_->nodes[node_id];
        if (node.left < 0) {
            for (int r : node.rows) {
                ++visited;
                Scored s{points_.row(r).dot(u), ids_[r]};
                if (static_cast<int>(best.size()) < k) {
                    best.push(s);
                } else if (s < best.top()) {
                    best.pop();
                    best.push(s);
                }
            }
            continue;
        }
        const double gap = q.dot(node.dir) - node.split;
        const int near = gap <= 0 ? node.left : node.right;
        const int far = gap <= 0 ? node.right : node.left;
        open.emplace(lb, near);
        open.emplace(std::max(lb, gap * gap), far);
    }
    g_last_visited = visited;
    std::vector<Scored> out;
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::sort(out.begin(), out.end());
    std::vector<int> res;
    for (const auto& s : out) res.push_back(s.id);
    return res;
}

std::vector<int> k_ann_query(const AnnIndex& idx, const Vec& u, int k, double eps) {
    return idx.query(u, k, eps);
}

Selection pure_embedding_solve(const Instance& inst, double eps, AnnBackend backend) {
    inst.validate();
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < inst.n; ++i) groups[inst.reward_of_item[i]].push_back(i);
    std::vector<std::pair<double, int>> cand;
    for (const auto& [rid, members] : groups) {
        Mat pts(members.size(), inst.d_v());
        for (std::size_t a = 0; a < members.size(); ++a) pts.row(static_cast<Eigen::Index>(a)) = inst.V.row(members[a]);
        AnnIndex idx(std::move(pts), members, backend);
        const int kk = std::min<int>(inst.k, static_cast<int>(members.size()));
        const double scale = std::exp(inst.value_log_scale);
        for (int id : idx.query(inst.u, kk, eps / scale)) {
            const double r = inst.reward(id)(inst.V.row(id).dot(inst.u) * scale);
            cand.emplace_back(r, id);
        }
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    Selection sel;
    for (const auto& [r, id] : cand) {
        if (static_cast<int>(sel.indices.size()) == inst.k || !(r > 0.0)) break;
        sel.indices.push_back(id);
        sel.objective += r;
    }
    std::sort(sel.indices.begin(), sel.indices.end());
    return sel;
}

}  // namespace attnopt
