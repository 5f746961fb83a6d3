/* models.hpp: continuous-time-step dynamics registry.
 * Every model must return the exact interval hull of the cell image; the
 * abstraction layer relies on that to stay sound without bloating. */
#ifndef REACH_MODELS_HPP_
#define REACH_MODELS_HPP_

#include <memory>
#include <string>
#include <vector>

#include "reach/core.hpp"

namespace reach {

using Vec = std::vector<double>;

/* circular corridor of heated rooms; one input per room */
struct RoomParams {
  int rooms = 3;
  double alpha = 0.45;   // inter-room conduction
  double beta = 0.045;   // leakage to the outside
  double gamma = 0.09;   // heater coupling
  double t_outside = -1.0;
  double t_heater = 50.0;
};

inline Vec eval_room_dynamics(const Vec& x, const Vec& u, const RoomParams& p) {
  const int n = p.rooms;
  Vec next(n);
  for (int i = 0; i < n; ++i) {
    double nb = x[(i + 1) % n] + x[(i + n - 1) % n];
    next[i] = x[i] + p.alpha * (nb - 2.0 * x[i]) + p.beta * (p.t_outside - x[i]) +
              p.gamma * (p.t_heater - x[i]) * u[i];
  }
  return next;
}

inline double eval_scalar_linear(double x, double u) { return 0.5 * x + u; }

struct AffineParams {
  std::vector<Vec> A;  // n x n, row major
  std::vector<Vec> B;  // n x m
  Vec c;               // n
};

class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual Vec eval(const Vec& x, const Vec& u) const = 0;
  /* exact interval hull of { eval(x,u) : x in box } */
  virtual Box interval_image(const Box& box, const Vec& u) const = 0;
  /* throws SoundnessError when an input would break the property that makes
   * interval_image exact (e.g. monotonicity) */
  virtual void check_input(const Vec& u) const = 0;
};

class RoomModel final : public DynamicsModel {
 public:
  explicit RoomModel(RoomParams p) : p_(p), name_("room-temperature") {
    if (p_.rooms < 2) throw ConfigError("room-temperature model needs at least 2 rooms");
  }
  const std::string& name() const override { return name_; }
  std::size_t state_dim() const override { return static_cast<std::size_t>(p_.rooms); }
  std::size_t input_dim() const override { return static_cast<std::size_t>(p_.rooms); }
  const RoomParams& params() const { return p_; }

  Vec eval(const Vec& x, const Vec& u) const override { return eval_room_dynamics(x, u, p_); }

  void check_input(const Vec& u) const override {
    for (double ui : u) {
      if (ui < 0.0) throw SoundnessError("room-temperature: negative heater input");
      /* coordinatewise monotone iff the self coefficient stays nonnegative */
      if (1.0 - 2.0 * p_.alpha - p_.beta - p_.gamma * ui < 0.0)
        throw SoundnessError("room-temperature: monotonicity lost at u=" + std::to_string(ui));
    }
  }

  Box interval_image(const Box& box, const Vec& u) const override {
    check_input(u);
    Vec lo(p_.rooms), hi(p_.rooms);
    for (int i = 0; i < p_.rooms; ++i) {
      lo[i] = box.axes[i].lo;
      hi[i] = box.axes[i].hi;
    }
    Vec flo = eval(lo, u), fhi = eval(hi, u);
    Box out;
    out.axes.resize(p_.rooms);
    for (int i = 0; i < p_.rooms; ++i) out.axes[i] = {flo[i], fhi[i]};
    return out;
  }

 private:
  RoomParams p_;
  std::string name_;
};

class ScalarLinearModel final : public DynamicsModel {
 public:
  ScalarLinearModel() : name_("scalar-linear") {}
  const std::string& name() const override { return name_; }
  std::size_t state_dim() const override { return 1; }
  std::size_t input_dim() const override { return 1; }
  Vec eval(const Vec& x, const Vec& u) const override { return {eval_scalar_linear(x[0], u[0])}; }
  void check_input(const Vec&) const override {}
  Box interval_image(const Box& box, const Vec& u) const override {
    return {{{eval_scalar_linear(box.axes[0].lo, u[0]), eval_scalar_linear(box.axes[0].hi, u[0])}}};
  }

 private:
  std::string name_;
};

/* x+ = A x + B u + c; the per-axis hull is exact because each row attains its
 * extremes at box corners */
class AffineModel final : public DynamicsModel {
 public:
  explicit AffineModel(AffineParams p) : p_(std::move(p)), name_("affine") {
    n_ = p_.A.size();
    if (n_ == 0 || p_.c.size() != n_) throw ConfigError("affine model: bad A/c dimensions");
    for (const auto& row : p_.A)
      if (row.size() != n_) throw ConfigError("affine model: A must be square");
    m_ = p_.B.empty() ? 0 : p_.B[0].size();
    if (p_.B.size() != n_) throw ConfigError("affine model: B must have n rows");
  }
  const std::string& name() const override { return name_; }
  std::size_t state_dim() const override { return n_; }
  std::size_t input_dim() const override { return m_; }

  Vec eval(const Vec& x, const Vec& u) const override {
    Vec out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double v = p_.c[i];
      for (std::size_t j = 0; j < n_; ++j) v += p_.A[i][j] * x[j];
      for (std::size_t j = 0; j < m_; ++j) v += p_.B[i][j] * u[j];
      out[i] = v;
    }
    return out;
  }

  void check_input(const Vec&) const override {}

  Box interval_image(const Box& box, const Vec& u) const override {
    Box out;
    out.axes.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double lo = p_.c[i], hi = p_.c[i];
      for (std::size_t j = 0; j < m_; ++j) {
        lo += p_.B[i][j] * u[j];
        hi += p_.B[i][j] * u[j];
      }
      for (std::size_t j = 0; j < n_; ++j) {
        double a = p_.A[i][j] * box.axes[j].lo, b = p_.A[i][j] * box.axes[j].hi;
        lo += std::min(a, b);
        hi += std::max(a, b);
      }
      out.axes[i] = {lo, hi};
    }
    return out;
  }

 private:
  AffineParams p_;
  std::string name_;
  std::size_t n_ = 0, m_ = 0;
};

/* a model together with the declared state/input geometry */
struct ContinuousSystem {
  std::shared_ptr<const DynamicsModel> model;
  std::vector<Vec> inputs;  // finite input list, declaration order is binding
  std::vector<std::string> input_labels;
};

struct Trajectory {
  std::vector<Vec> states;
  std::vector<InputId> inputs;  // inputs.size() == states.size()-1
};

}  // namespace reach

#endif
