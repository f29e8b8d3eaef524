#include "dekrr/solver.hpp"

#include <cmath>
#include <limits>

namespace dekrr {

PenaltyConfig PenaltyConfig::uniform(int J, double c_nei, double self_mult) {
  require(c_nei > 0, "PenaltyConfig: c_nei must be positive");
  require(self_mult > 0, "PenaltyConfig: self multiplier must be positive");
  PenaltyConfig pc;
  pc.c_nei = Vector::Constant(J, c_nei);
  pc.c_self = Vector::Constant(J, self_mult * c_nei);
  return pc;
}

double effective_lambda(double lambda, double N, int J, double N_j) {
  require(lambda > 0 && N > 0 && J > 0, "effective_lambda: inputs must be positive");
  require(N_j > 0, "effective_lambda: empty node");
  return lambda * N / (J * N_j);
}

void build_aux(NodeState& st, const std::map<int, Matrix>& neighbor_Zpp,
               const Topology& topo, const PenaltyConfig& pc, double self_scale,
               double lambda, double N) {
  const int j = st.id;
  const int deg = topo.degree(j);
  const int J = topo.J;
  const Index fd = st.spec.feature_dim();
  require(st.Zjj.rows() == fd && st.Zjj.cols() == st.shard.n_train(),
          "build_aux: Zjj shape mismatch on node " + std::to_string(j));

  AuxMatrices& a = st.aux;
  a.M_self.noalias() = st.Zjj * st.Zjj.transpose();
  a.M_self = 0.5 * (a.M_self + a.M_self.transpose()).eval();  // keep exactly symmetric
  a.ridge = lambda / J;
  const double ct_nei = pc.ctilde_nei(j, N, deg);
  a.coef_base = 1.0 / N + deg * ct_nei;

  a.M_nbr = Matrix::Zero(fd, fd);
  for (int p : topo.nbrs[j]) {
    auto it = st.Zjp.find(p);
    require(it != st.Zjp.end(),
            "build_aux: missing cross block Z_jp for neighbor " + std::to_string(p));
    const double ct_p = pc.ctilde_nei(p, N, topo.degree(p));
    a.M_nbr.noalias() += ct_p * (it->second * it->second.transpose());
  }
  a.M_nbr = 0.5 * (a.M_nbr + a.M_nbr.transpose()).eval();

  a.d.noalias() = (1.0 / N) * (st.Zjj * st.shard.y_train.transpose());

  a.P.clear();
  a.P.reserve(deg);
  for (int p : topo.nbrs[j]) {
    const auto& Zjp = st.Zjp.at(p);       // own spec on p's data
    const auto& Zpj = st.Zpj.at(p);       // p's spec on own data
    const auto& Zpp = neighbor_Zpp.at(p); // p's spec on p's data
    require(Zpp.cols() == Zjp.cols(),
            "build_aux: Zpp/Zjp sample-count mismatch for neighbor " + std::to_string(p));
    const double ct_p = pc.ctilde_nei(p, N, topo.degree(p));
    Matrix Pjp = ct_nei * (st.Zjj * Zpj.transpose());
    Pjp.noalias() += ct_p * (Zjp * Zpp.transpose());
    a.P.push_back(std::move(Pjp));
  }

  rebuild_aux_self(st, self_scale * pc.ctilde_self(j, N, deg));
}

void rebuild_aux_self(NodeState& st, double ctilde_self_scaled) {
  AuxMatrices& a = st.aux;
  const Index fd = a.M_self.rows();
  a.S = (2.0 * ctilde_self_scaled) * a.M_self;
  a.bracket = (a.coef_base + 2.0 * ctilde_self_scaled) * a.M_self + a.M_nbr;
  a.bracket.diagonal().array() += a.ridge;
  a.G.compute(a.bracket);
  require(a.G.info() == Eigen::Success,
          "aux factorization failed on node " + std::to_string(st.id));
  require(fd == a.bracket.rows(), "rebuild_aux_self: cache shape mismatch");
}

Vector local_update(const AuxMatrices& aux, const Vector& theta,
                    const std::vector<const Vector*>& neighbor_thetas) {
  require(theta.size() == aux.bracket.rows(), "local_update: theta dimension mismatch");
  require(neighbor_thetas.size() == aux.P.size(),
          "local_update: neighbor count mismatch");
  Vector rhs = aux.d;
  rhs.noalias() += aux.S * theta;
  for (std::size_t i = 0; i < aux.P.size(); ++i) {
    require(neighbor_thetas[i]->size() == aux.P[i].cols(),
            "local_update: neighbor theta dimension mismatch");
    rhs.noalias() += aux.P[i] * (*neighbor_thetas[i]);
  }
  return aux.G.solve(rhs);
}

double objective(const std::vector<NodeState>& states, const Topology& topo,
                 const PenaltyConfig& pc, double lambda, double N) {
  double total = 0;
  for (int j = 0; j < topo.J; ++j) {
    const NodeState& st = states[j];
    const int deg = topo.degree(j);
    RowVector fit = st.theta.transpose() * st.Zjj;  // own predictions on own data
    total += (fit - st.shard.y_train).squaredNorm() / N;
    total += (lambda / topo.J) * st.theta.squaredNorm();
    const double ct_nei = pc.ctilde_nei(j, N, deg);
    for (int p : topo.nbrs[j]) {
      RowVector fp = states[p].theta.transpose() * st.Zpj.at(p);
      total += ct_nei * (fit - fp).squaredNorm();
    }
  }
  return total;
}

std::vector<DescentReport> check_descent_condition(const std::vector<NodeState>& states,
                                                 const Topology& topo,
                                                 const PenaltyConfig& pc,
                                                 double self_scale, double N) {
  std::vector<DescentReport> reports(topo.J);
  for (int j = 0; j < topo.J; ++j) {
    const AuxMatrices& a = states[j].aux;
    const int deg = topo.degree(j);
    DescentReport& r = reports[j];
    Eigen::SelfAdjointEigenSolver<Matrix> es_self(a.M_self, Eigen::EigenvaluesOnly);
    r.lambda_min_self = es_self.eigenvalues().minCoeff();
    if (deg == 0) {
      r.lambda_max_nbr = 0;
      r.satisfiable = true;
      r.required_ctilde_self = 0;  // empty neighbor sums: any positive value works
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es_nbr(a.M_nbr, Eigen::EigenvaluesOnly);
      r.lambda_max_nbr = es_nbr.eigenvalues().maxCoeff();
      if (r.lambda_min_self <= 1e-12) {
        r.satisfiable = false;
        r.required_ctilde_self = std::numeric_limits<double>::infinity();
        r.satisfied = false;
        continue;
      }
      r.satisfiable = true;
      r.required_ctilde_self = deg * pc.ctilde_nei(j, N, deg) / 2.0 +
                               r.lambda_max_nbr / (2.0 * r.lambda_min_self);
    }
    r.satisfied =
        self_scale * pc.ctilde_self(j, N, deg) >= r.required_ctilde_self;
  }
  return reports;
}

}  // namespace dekrr
