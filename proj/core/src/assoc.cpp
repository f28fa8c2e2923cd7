#include "crosswatch/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crosswatch/errors.hpp"

namespace crosswatch::assoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path Hungarian on a matrix with rows <= cols.
// Column index 0 is a virtual slot holding the row currently being placed;
// real columns are 1-based inside this routine.
//
// The matrix is implicitly completed: infeasible cells and n extra virtual
// columns all carry the same large finite cost `big`, chosen so that one
// `big` outweighs any possible difference in real costs. Minimizing over the
// completed matrix therefore maximizes the number of sub-`big` (real)
// matches first and minimizes their cost second; callers drop matches that
// land on a virtual column or an infeasible cell. Completing the matrix
// keeps the classic algorithm's invariants intact, which a skip-infeasible
// variant would not (a row abandoned early can block a cheaper global
// solution).
std::vector<int> solve_rows_le_cols(const CostMatrix& m, bool transposed, double big) {
    const int n = transposed ? m.cols() : m.rows();
    const int w_real = transposed ? m.rows() : m.cols();
    const int w = w_real + n; // virtual columns: every row can stay unmatched
    auto cost = [&](int r, int c) {
        if (c >= w_real) return big;
        const int rr = transposed ? c : r;
        const int cc = transposed ? r : c;
        return m.feasible(rr, cc) ? m.at(rr, cc) : big;
    };

    std::vector<double> u(n + 1, 0.0), v(w + 1, 0.0);
    std::vector<int> match(w + 1, 0); // match[j] = 1-based row on column j, 0 if free
    std::vector<int> way(w + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(w + 1, kInf);
        std::vector<char> used(w + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= w; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= w; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);

        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    return match;
}

} // namespace

Assignment hungarian(const CostMatrix& m) {
    Assignment out;
    const int rows = m.rows();
    const int cols = m.cols();
    if (rows == 0 || cols == 0) {
        for (int r = 0; r < rows; ++r) out.unmatched_rows.push_back(r);
        for (int c = 0; c < cols; ++c) out.unmatched_cols.push_back(c);
        return out;
    }

    const bool transposed = rows > cols;
    const int n = std::min(rows, cols);

    // one `big` must outweigh swapping every real match for the worst cell
    double max_abs = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (m.feasible(r, c)) max_abs = std::max(max_abs, std::abs(m.at(r, c)));
    const double big = (2.0 * n + 1.0) * (max_abs + 1.0);

    const std::vector<int> match = solve_rows_le_cols(m, transposed, big);

    std::vector<char> row_done(rows, 0), col_done(cols, 0);
    const int w = transposed ? rows : cols; // virtual columns beyond w are dropped
    for (int j = 1; j <= w; ++j) {
        if (match[j] == 0) continue;
        const int r = transposed ? j - 1 : match[j] - 1;
        const int c = transposed ? match[j] - 1 : j - 1;
        if (!m.feasible(r, c)) continue; // landed on a completed cell, not a real match
        out.matches.emplace_back(r, c);
        row_done[r] = 1;
        col_done[c] = 1;
        out.total_cost += m.at(r, c);
    }
    std::sort(out.matches.begin(), out.matches.end());
    for (int r = 0; r < rows; ++r)
        if (!row_done[r]) out.unmatched_rows.push_back(r);
    for (int c = 0; c < cols; ++c)
        if (!col_done[c]) out.unmatched_cols.push_back(c);
    return out;
}

CostMatrix iou_cost(const std::vector<geometry::BBox>& tracks,
                    const std::vector<geometry::BBox>& detections,
                    double iou_min) {
    CostMatrix m(static_cast<int>(tracks.size()), static_cast<int>(detections.size()));
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            const double v = geometry::iou(tracks[r], detections[c]);
            if (v >= iou_min) m.set(r, c, 1.0 - v);
        }
    }
    return m;
}

CostMatrix mahalanobis_cost(
    const std::vector<std::pair<Eigen::Vector4d, Eigen::Matrix4d>>& projected,
    const std::vector<Eigen::Vector4d>& observations,
    double gate) {
    CostMatrix m(static_cast<int>(projected.size()), static_cast<int>(observations.size()));
    for (int r = 0; r < m.rows(); ++r) {
        const auto& [y, s] = projected[r];
        const Eigen::LDLT<Eigen::Matrix4d> ldlt(s);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw ValidationError("innovation covariance not positive definite in gating");
        }
        for (int c = 0; c < m.cols(); ++c) {
            const Eigen::Vector4d d = observations[c] - y;
            const double d2 = d.dot(ldlt.solve(d));
            if (d2 <= gate) m.set(r, c, d2);
        }
    }
    return m;
}

CostMatrix cosine_cost(const std::vector<std::vector<Eigen::VectorXd>>& galleries,
                       const std::vector<Eigen::VectorXd>& embeddings,
                       double gate) {
    CostMatrix m(static_cast<int>(galleries.size()), static_cast<int>(embeddings.size()));
    for (int r = 0; r < m.rows(); ++r) {
        if (galleries[r].empty()) {
            throw ValidationError("appearance gallery is empty; tracks must carry at least one descriptor");
        }
        for (int c = 0; c < m.cols(); ++c) {
            double best = 2.0;
            for (const auto& g : galleries[r]) {
                if (g.size() != embeddings[c].size()) {
                    throw ValidationError("embedding dimensions disagree between track gallery and detection");
                }
                best = std::min(best, 1.0 - g.dot(embeddings[c]));
            }
            if (best <= gate) m.set(r, c, best);
        }
    }
    return m;
}

CostMatrix combined_cost(const CostMatrix& motion, const CostMatrix& appearance,
                         double lambda) {
    if (motion.rows() != appearance.rows() || motion.cols() != appearance.cols()) {
        throw ValidationError("combined_cost requires equally shaped cost matrices");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ValidationError("lambda must lie in [0, 1]");
    }
    CostMatrix m(motion.rows(), motion.cols());
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            if (motion.feasible(r, c) && appearance.feasible(r, c)) {
                m.set(r, c, lambda * motion.at(r, c) + (1.0 - lambda) * appearance.at(r, c));
            }
        }
    }
    return m;
}

} // namespace crosswatch::assoc
