// SPDX-License-Identifier: MIT
#include "attnopt/retrieval.hpp"

#include "attnopt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace attnopt {

namespace {

double value_bound(const Instance& inst) { return inst.values().cwiseAbs().maxCoeff(); }

void pack(const Mat& rows, double delta, std::vector<int>& centers, std::vector<int>& assign) {
    const int n = static_cast<int>(rows.rows());
    centers.clear();
    assign.assign(n, 0);
    if (!std::isfinite(delta)) {
        centers.push_back(0);
        return;
    }
    const double r = delta / 2.0;
    for (int i = 0; i < n; ++i) {
        bool covered = false;
        for (int c : centers)
            if ((rows.row(i) - rows.row(c)).norm() <= r) {
                covered = true;
                break;
            }
        if (!covered) centers.push_back(i);
    }
    for (int i = 0; i < n; ++i) {
        double best = kInf;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double dist = (rows.row(i) - rows.row(centers[c])).norm();
            if (dist < best) {
                best = dist;
                assign[i] = static_cast<int>(c);
            }
        }
        if (best > r * (1.0 + 1e-12)) throw NumericalError("cover partition: item left uncovered");
    }
}

}  // namespace

double choose_delta(const Instance& inst, double eps) {
    if (!(eps > 0.0)) throw ValidationError("epsilon must be positive");
    const double phi = inst.phi();
    if (phi == 0.0) return kInf;
    const double a = value_bound(inst);
    return std::min(1.0 / (140.0 * phi), eps / (34.0 * phi * a + 1.0));
}

double CoverPartition::max_diameter(const Instance& inst) const {
    double diam = 0.0;
    for (const auto& cell : cells)
        for (std::size_t a = 0; a < cell.members.size(); ++a)
            for (std::size_t b = a + 1; b < cell.members.size(); ++b) {
                const int i = cell.members[a], j = cell.members[b];
                diam = std::max(diam, (inst.Q.row(i) - inst.Q.row(j)).norm());
                diam = std::max(diam, (inst.K.row(i) - inst.K.row(j)).norm());
            }
    return diam;
}

CoverPartition build_cover_partition(const Instance& inst, double delta) {
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    CoverPartition part;
    part.delta = delta;
    part.phi = inst.phi();
    pack(inst.Q, delta, part.q_centers, part.q_cluster);
    pack(inst.K, delta, part.k_centers, part.k_cluster);
    std::map<std::tuple<int, int, int>, std::vector<int>> cells;
    for (int i = 0; i < inst.n; ++i)
        cells[{part.q_cluster[i], part.k_cluster[i], inst.reward_of_item[i]}].push_back(i);
    for (auto& [key, members] : cells)
        part.cells.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::move(members)});
    return part;
}

double phase_one_ann_eps(const Instance& inst, double eps, double delta) {
    const double phi = inst.phi();
    const double a = value_bound(inst);
    const double stated = (phi > 0.0 && a > 0.0) ? eps / (35.0 * phi * a) : kInf;
    return std::min(delta, stated);
}

CandidateSet phase_one_query(const CoverPartition& part, const Instance& inst, int k, double eps_ann,
                             AnnBackend backend) {
    CandidateSet out;
    out.per_cell.resize(part.cells.size());
    const double scale = std::exp(inst.value_log_scale);
    const double eps_raw = std::isfinite(eps_ann) ? eps_ann / scale : eps_ann;
    parallel_for(part.cells.size(), [&](std::size_t c) {
        const auto& members = part.cells[c].members;
        if (static_cast<int>(members.size()) <= k) {
            out.per_cell[c] = members;
            return;
        }
        Mat pts(members.size(), inst.d_v());
        for (std::size_t a = 0; a < members.size(); ++a)
            pts.row(static_cast<Eigen::Index>(a)) = inst.V.row(members[a]);
        AnnIndex idx(std::move(pts), members, backend, 0x5eed + c);
        const double slack = std::isfinite(eps_raw) ? eps_raw : 0.0;
        auto ids = idx.query(inst.u, k, slack);
        std::sort(ids.begin(), ids.end());
        out.per_cell[c] = std::move(ids);
    });
    for (const auto& ids : out.per_cell) out.ids.insert(out.ids.end(), ids.begin(), ids.end());
    std::sort(out.ids.begin(), out.ids.end());
    return out;
}

}  // namespace attnopt
