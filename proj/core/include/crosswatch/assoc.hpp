#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "crosswatch/geometry.hpp"
#include "crosswatch/kalman.hpp"

namespace crosswatch::assoc {

// Rectangular cost matrix where cells can be marked infeasible outright.
// Gating works by marking, never by writing large sentinel costs, so the
// solver's arithmetic only ever sees real costs.
class CostMatrix {
public:
    CostMatrix(int rows, int cols)
        : cost_(Eigen::MatrixXd::Zero(rows, cols)),
          feasible_(Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false)) {}

    int rows() const { return static_cast<int>(cost_.rows()); }
    int cols() const { return static_cast<int>(cost_.cols()); }

    void set(int r, int c, double value) {
        cost_(r, c) = value;
        feasible_(r, c) = true;
    }
    void mark_infeasible(int r, int c) { feasible_(r, c) = false; }

    bool feasible(int r, int c) const { return feasible_(r, c); }
    double at(int r, int c) const { return cost_(r, c); }

private:
    Eigen::MatrixXd cost_;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> feasible_;
};

struct Assignment {
    std::vector<std::pair<int, int>> matches; // (row, col), sorted by row
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
    double total_cost = 0.0;
};

// Exact minimum-cost assignment on a rectangular matrix with forbidden
// cells. Among all assignments of maximum cardinality it returns one of
// minimum total cost. Shortest-augmenting-path construction with dual
// potentials; a row whose search cannot reach any free column stays
// unmatched. Deterministic: rows are processed in order and column scans
// are in order, so ties resolve the same way every run.
Assignment hungarian(const CostMatrix& m);

// 1 - IoU, cells below iou_min are infeasible.
CostMatrix iou_cost(const std::vector<geometry::BBox>& tracks,
                    const std::vector<geometry::BBox>& detections,
                    double iou_min);

// Squared Mahalanobis distance of each detection observation to each
// projected track state (mean, innovation covariance). Cells above `gate`
// are infeasible. Gate of 9.4877 is the chi-square 0.95 quantile at 4 dof.
CostMatrix mahalanobis_cost(
    const std::vector<std::pair<Eigen::Vector4d, Eigen::Matrix4d>>& projected,
    const std::vector<Eigen::Vector4d>& observations,
    double gate);

// Smallest cosine distance between the detection embedding and any gallery
// member, per track. Cells above `gate` are infeasible. All embeddings must
// be unit norm; empty galleries are an error.
CostMatrix cosine_cost(const std::vector<std::vector<Eigen::VectorXd>>& galleries,
                       const std::vector<Eigen::VectorXd>& embeddings,
                       double gate);

// lambda * motion + (1 - lambda) * appearance; a cell is feasible only when
// it is feasible in both inputs. Shapes must agree.
CostMatrix combined_cost(const CostMatrix& motion, const CostMatrix& appearance,
                         double lambda);

} // namespace crosswatch::assoc
