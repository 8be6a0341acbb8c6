#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "css/functionals.hpp"
#include "css/grid.hpp"

namespace css {

enum class GaugeRefresh { every_substep, every_step };
enum class Scheme { strang_split, rk4_spectral };

const char* to_string(GaugeRefresh r);
const char* to_string(Scheme s);

struct EvolutionConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  GaugeRefresh gauge_refresh = GaugeRefresh::every_substep;
  Scheme scheme = Scheme::strang_split;
  int monitor_stride = 10;
  double blowup_threshold = 25.0;  // kinetic_cov(t) / kinetic_cov(0)
  int checkpoint_stride = 100;
  bool virial = false;        // record I(t)
  double chi_radius = 0.0;    // > 0: record V for chi_R with this R
  bool dealias = false;       // apply the 2/3 mask after every step
  double implicit_tol = 1e-13;
  int implicit_max_iters = 60;
};

/// Throws std::invalid_argument on dt <= 0, t_max <= 0, strides < 1,
/// blowup_threshold <= 1.
void validate(const EvolutionConfig& config);

/// Thrown when an implicit substep fails to converge.
class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One step of size dt (negative dt integrates backwards; config.dt ignored).
///
/// strang_split: explicit half phase exp(-i dt/2 V(phi_n)) with
/// V = A1^2 + A2^2 + A0 - lambda |phi|^{p-2}; then exp(i dt/2 Lap), an
/// implicit-midpoint step of the skew advection -(A.grad + div(A .)) with A
/// averaged over its endpoints, exp(i dt/2 Lap); then the closing half phase,
/// implicit in A0. Symmetric, second order, unitary.
/// rk4_spectral: classical RK4 on -i grad E with the gauge recomputed at
/// every stage.
ComplexField step(const ComplexField& phi, const ModelParams& params, const EvolutionConfig& config, double dt);
ComplexField step(const ComplexField& phi, const ModelParams& params, const EvolutionConfig& config);

struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double q = 0.0;
  double kinetic_cov = 0.0;
  std::optional<double> i_virial;
  std::optional<double> v_localized;
  double max_amp = 0.0;
};

DiagnosticsRecord diagnose(const ComplexField& phi, double t, const ModelParams& params);

inline constexpr const char* diagnostics_header = "t,mass,energy,q,kinetic_cov,i_virial,v_localized,max_amp";
/// Header line plus one row per record; absent optional columns are empty.
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records);

enum class VerdictKind { completed, blowup_suspected, aborted };
const char* to_string(VerdictKind v);

struct Verdict {
  VerdictKind kind = VerdictKind::completed;
  double t_star = 0.0;           // growth time (blowup_suspected) or abort time
  double t_star_refined = 0.0;   // growth time at dt/2, when checked
  std::string reason;
};

struct EvolutionResult {
  ComplexField final_field;
  double t_final = 0.0;
  std::vector<DiagnosticsRecord> records;
  Verdict verdict;
  ComplexField checkpoint;  // last healthy checkpoint
  double checkpoint_time = 0.0;
  double max_mass_drift = 0.0;    // relative, over monitored samples
  double max_energy_drift = 0.0;  // relative to |E(0)| (kinetic_cov(0) when E(0) = 0)
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const DiagnosticsRecord& r);
void to_json(nlohmann::json& j, const Verdict& v);

using CheckpointSink = std::function<void(double t, const ComplexField& phi)>;

/// Integrates to t_max or until kinetic_cov exceeds blowup_threshold times
/// its initial value. Growth is reported as blowup_suspected only when a
/// dt/2 rerun crosses the threshold within 10% of the same time; otherwise
/// the run is aborted. Non-finite fields and failed substeps abort with the
/// last checkpoint.
EvolutionResult evolve(const ComplexField& phi0, const ModelParams& params, const EvolutionConfig& config,
                       const CheckpointSink& sink = {});

/// min over global phases and whole-cell shifts of ||phi - e^{i theta} u(. - s)||.
double orbit_distance(const ComplexField& phi, const ComplexField& u);

/// Evolves u_star + delta * (smooth random perturbation), renormalized to
/// the mass of u_star, and returns the largest orbit distance over the
/// monitored times divided by ||u_star||.
double stability_probe(const ComplexField& u_star, const ModelParams& params, double perturbation_size,
                       const EvolutionConfig& config, std::uint64_t seed = 1);

}  // namespace css
