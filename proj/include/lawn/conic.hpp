#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace lawn::conic {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Relation { eq, le, ge };
enum class SolveStatus { optimal, infeasible, unbounded, max_iter };

// A linear functional references per-block coefficient matrices through
// a per-block dictionary, so constraints sharing the same matrix (up to
// a scalar) reuse it; the solver exploits this when forming the Schur
// complement.
struct BlockTerm {
  int block;
  int dict;
  double scale;
};

struct FreeTerm {
  int index;
  double coeff;
};

struct LinearFunctional {
  std::vector<BlockTerm> blocks;
  std::vector<FreeTerm> free_vars;
};

struct Constraint {
  LinearFunctional lhs;
  Relation rel = Relation::eq;
  double rhs = 0.0;
};

// Linear-objective problem over PSD matrix blocks plus free scalars:
//   minimize  <objective, (X, u)>
//   s.t.      constraint_i:  <lhs_i, (X, u)>  (=, <=, >=)  rhs_i
//             X_b PSD for every block b, u free.
struct ConicProblem {
  std::vector<int> block_dims;
  int n_free = 0;
  std::vector<std::vector<Mat>> dict;  // per-block coefficient matrices
  LinearFunctional objective;
  std::vector<Constraint> constraints;

  int add_block(int dim);
  int add_free();
  // registers a (symmetrized) coefficient matrix, returns its dict index
  int add_matrix(int block, const Mat& m);

  void validate() const;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct ConicSolution {
  std::vector<Mat> block_values;
  Vec free_values;
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  Residuals residuals;
  int iterations = 0;
};

// Primal-dual path-following interior-point solve (HKM direction with a
// Mehrotra corrector, dense blocks). Inequalities become equalities
// with nonnegative slacks internally.
ConicSolution solve(const ConicProblem& p, double tol = 1e-7,
                    int max_iter = 200);

// Real symmetric embedding [[Re, -Im], [Im, Re]] of a complex Hermitian
// matrix; eigenvalues are those of the input with doubled multiplicity,
// and <embed(A), embed(W)> = 2 Re<A, W>. Throws on non-Hermitian input.
Mat hermitian_embed(const Eigen::MatrixXcd& h);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& m);

// Plain-text dump for offline cross-checking: a header describing the
// block structure, then one record per constraint carrying the
// relation, right-hand side, and upper-triangle coefficient triples.
void dump(const ConicProblem& p, std::ostream& os);

}  // namespace lawn::conic
