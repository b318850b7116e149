#pragma once

#include "detscope/discretize.hpp"
#include "detscope/partial_wave.hpp"
#include "detscope/potential.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace detscope {

struct DetValue {
    cd k{0, 0};
    cd d{1, 0};
    cd log_d{0, 0};
    double rho = 0;
    double phi = 0;
    std::vector<cd> eigenvalues; // spectrum of Q0(k) when the engine exposes it
    int branch_path = -1;        // -1: principal (per-factor) branch
};

DetValue make_det_value(cd k, cd log_d);

// det[(I + Q0) e^{-Q0}] from the eigenvalues of a Q0 matrix.
DetValue det2(const OperatorMatrix& q0);
// Same value via LU: log det(I+Q0) - tr Q0 (no eigenvalues stored).
DetValue det2_lu(const OperatorMatrix& q0);
// Seed value -sum_{n>=2} tr(-Q0)^n / n, truncated by the remainder bound
// ||Q0||^{m+1} ||Q0||_2^2 / (m+3) < tol. Requires ||Q0|| < 1/2.
DetValue det2_series(const OperatorMatrix& q0, double tol = 1e-12);

// Evaluates D on a given discretization. Implementations: tensor Nystrom and partial waves.
class DetEngine {
  public:
    virtual ~DetEngine() = default;
    virtual DetValue evaluate(cd k) const = 0;       // principal branch
    virtual DetValue seed(cd k) const { return evaluate(k); }
    virtual cd log_derivative(cd k) const = 0;       // D'/D
    virtual double hs_norm(cd k) const = 0;          // ||Q0(k)||_2
    virtual std::string fingerprint() const = 0;
    virtual const Potential& potential() const = 0;
    virtual double depth_limit() const { return kappa_max(potential().r_eff); }

    // Zero finding works on channel functions whose zeros, with multiplicity, are those of D.
    virtual int channel_multiplicity(int channel) const = 0;
    virtual cd channel_log(int channel, cd k) const = 0;
    virtual cd channel_log_derivative(int channel, cd k) const = 0;
    // Channels that can carry zeros with |k| <= radius (best effort; the search confirms).
    virtual int channel_limit(double radius) const = 0;
};

class NystromEngine final : public DetEngine {
  public:
    NystromEngine(Potential pot, int resolution, bool eigen_route = true);
    DetValue evaluate(cd k) const override;
    DetValue seed(cd k) const override;
    cd log_derivative(cd k) const override;
    double hs_norm(cd k) const override;
    std::string fingerprint() const override;
    const Potential& potential() const override { return pot_; }
    int channel_multiplicity(int) const override { return 1; }
    cd channel_log(int, cd k) const override { return evaluate(k).log_d; }
    cd channel_log_derivative(int, cd k) const override { return log_derivative(k); }
    int channel_limit(double) const override { return 0; }
    const QuadratureGrid& grid() const { return grid_; }

  private:
    Potential pot_;
    QuadratureGrid grid_;
    bool eigen_route_;
};

class PartialWaveEngine final : public DetEngine {
  public:
    explicit PartialWaveEngine(Potential pot, PartialWaveOptions opt = {});
    DetValue evaluate(cd k) const override;
    cd log_derivative(cd k) const override;
    double hs_norm(cd k) const override;
    std::string fingerprint() const override;
    const Potential& potential() const override { return pot_; }
    int channel_multiplicity(int ell) const override { return 2 * ell + 1; }
    cd channel_log(int ell, cd k) const override;
    cd channel_log_derivative(int ell, cd k) const override;
    int channel_limit(double radius) const override;
    const PartialWaveOptions& options() const { return opt_; }

  private:
    Potential pot_;
    PartialWaveOptions opt_;
};

// Partial waves for radial potentials, tensor Nystrom otherwise.
std::unique_ptr<DetEngine> make_engine(const Potential& pot, int resolution = 12);

// Smallest tau (within 5%) with ||Q0(i tau)||_2 < bound.
double seed_height(const DetEngine& engine, double bound = 0.4);

struct ContinuationOptions {
    double max_jump = 1.5707963267948966; // refine when |Delta log D| exceeds this
    double min_step = 1e-6;
};

// Branch of log D continued along `path` from a seed at path[0].
std::vector<DetValue> continue_log(const std::vector<cd>& path, const DetEngine& engine, int path_id = 0,
                                   const ContinuationOptions& opt = {});
// Continue one more point from a known value.
DetValue continue_from(const DetValue& from, cd to, const DetEngine& engine, const ContinuationOptions& opt = {});

// Straight segment from i*tau0 to the real point t, then nothing else: `samples` points.
std::vector<cd> seed_segment(double tau0, double t, int samples = 24);

struct BlaschkeData {
    std::vector<double> kappas; // sqrt(lambda_j), descending
    int n = 0;
    std::map<int, double> beta;  // n = -2, 0..4
    std::map<int, double> gamma; // n = -1, 0, 1
};

cd blaschke(const std::vector<double>& kappas, cd k);
// Branch with log B = o(1) at i*infinity; k = 0 is taken as the limit t -> +0.
cd log_blaschke(const std::vector<double>& kappas, cd k);
DetValue db_quotient(const DetValue& value, const BlaschkeData& data);
BlaschkeData beta_gamma(std::vector<double> kappas, const Moments& m);

cd log_derivative(const QuadratureGrid& grid, const Potential& pot, cd k);

} // namespace detscope
