#include "ndb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "ndb/constants.hpp"
#include "ndb/errors.hpp"

namespace ndb {

namespace {

constexpr char binary_magic[8] = {'N', 'D', 'B', 'T', 'R', 'A', 'J', '1'};
constexpr std::uint32_t binary_columns = 11;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw ParseError("truncated trajectory file");
    }
    return v;
}

void put_rows(std::ostream& os, const std::vector<TrajectorySample>& rows) {
    put<std::uint64_t>(os, rows.size());
    for (const auto& s : rows) {
        put(os, s.t);
        for (double v : s.y) put(os, v);
        put(os, s.energy_K);
        put(os, s.omega3_drift);
        put(os, s.energy_drift);
        put(os, s.q24);
    }
}

std::vector<TrajectorySample> get_rows(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    std::vector<TrajectorySample> rows(n);
    for (auto& s : rows) {
        s.t = get<double>(is);
        for (double& v : s.y) v = get<double>(is);
        s.energy_K = get<double>(is);
        s.omega3_drift = get<double>(is);
        s.energy_drift = get<double>(is);
        s.q24 = get<double>(is);
    }
    return rows;
}

void write_row(std::ostream& os, const TrajectorySample& s) {
    os << s.t;
    for (double v : s.y) os << ',' << v;
    os << ',' << s.energy_K << ',' << s.omega3_drift << ',' << s.energy_drift << ',' << s.q24 << '\n';
}

}  // namespace

void SimulationSetup::prepare() {
    particle.validate();
    trap.validate();
    trap = resolve_field(trap, particle);
    feedback.radius = particle.radius;
    feedback.validate();
    noise.validate();
    integrator.validate();
    if (!(duration >= 0.0)) throw ValidationError("duration must be non-negative");
    if (!(sample_dt > 0.0)) throw ValidationError("output.sample_dt must be positive");
    if (!(tail_duration >= 0.0 && tail_duration <= duration)) {
        throw ValidationError("tail duration must lie within the run");
    }
    if ((tail_duration > 0.0 || !dense_windows.empty()) && !(tail_dt > 0.0)) {
        throw ValidationError("dense sampling interval must be positive");
    }
    for (std::size_t i = 0; i < dense_windows.size(); ++i) {
        const auto& [a, b] = dense_windows[i];
        if (!(a >= 0.0 && b > a && b <= duration)) throw ValidationError("dense window must lie within the run");
        if (i > 0 && a < dense_windows[i - 1].second) throw ValidationError("dense windows must be ordered and disjoint");
    }
}

const char* TrajectoryRecord::csv_header() {
    return "t,alpha,beta,gamma,alpha_dot,beta_dot,omega3,eps_K,omega3_drift,energy_drift,q24";
}

void TrajectoryRecord::write_csv(std::ostream& os, bool tail_only) const {
    const auto old = os.precision(17);
    os << csv_header() << '\n';
    for (const auto& s : tail_only ? tail : samples) write_row(os, s);
    os.precision(old);
}

void TrajectoryRecord::write_binary(std::ostream& os) const {
    os.write(binary_magic, sizeof binary_magic);
    put(os, binary_columns);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(reason));
    put(os, steps);
    put(os, rejected);
    put(os, initial_energy_K);
    put(os, final_energy_K);
    for (double v : to_vector(initial)) put(os, v);
    for (double v : to_vector(final_state)) put(os, v);
    put(os, final_state.t);
    put_rows(os, samples);
    put_rows(os, tail);
    put<std::uint64_t>(os, windows.size());
    for (const auto& w : windows) put_rows(os, w);
}

TrajectoryRecord TrajectoryRecord::read_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, binary_magic, sizeof magic) != 0) {
        throw ParseError("not a trajectory file");
    }
    if (get<std::uint32_t>(is) != binary_columns) {
        throw ParseError("unsupported trajectory column count");
    }
    TrajectoryRecord r;
    r.reason = static_cast<Termination>(get<std::uint8_t>(is));
    r.steps = get<std::uint64_t>(is);
    r.rejected = get<std::uint64_t>(is);
    r.initial_energy_K = get<double>(is);
    r.final_energy_K = get<double>(is);
    EulerVector a, b;
    for (double& v : a) v = get<double>(is);
    for (double& v : b) v = get<double>(is);
    const double tf = get<double>(is);
    r.initial = from_vector(a, 0.0);
    r.final_state = from_vector(b, tf);
    r.samples = get_rows(is);
    r.tail = get_rows(is);
    r.windows.resize(get<std::uint64_t>(is));
    for (auto& w : r.windows) w = get_rows(is);
    return r;
}

double barrier_kelvin(const RotorModel& model) {
    // lowest saddle: alpha = pi/2 in the plane of the field (cos 2 theta) or the pole (cos^2 theta)
    const double saddle = std::min(model.cos_sq - model.sin_sq, model.cos_sq);
    return model.depth * saddle / constants::boltzmann;
}

TrajectoryRecord simulate(const SimulationSetup& setup, const EulerState& initial, Rng& rng) {
    const RotorModel model(setup.particle, setup.trap);
    const DampingRates damping = resolve_damping(setup.noise, setup.particle);
    const bool measure_noise = setup.feedback.measurement_noise > 0.0 && setup.feedback.signal != FeedbackSignal::off;
    const bool noisy = setup.noise.any() || measure_noise;
    const double barrier = barrier_kelvin(model);

    IntegratorConfig icfg = setup.integrator;
    // keep the OU splitting fine compared with the damping time
    const double fastest = std::max(damping.alpha_beta, damping.gamma);
    if (fastest > 0.0) {
        icfg.dt_max = std::min(icfg.dt_max, 0.02 / fastest);
        icfg.dt_init = std::min(icfg.dt_init, 0.5 * icfg.dt_max);
        icfg.dt_min = std::min(icfg.dt_min, 0.1 * icfg.dt_init);
    }

    FeedbackSystem system{model, setup.feedback.signal, 0.0, 0.0, 0.0};
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (measure_noise) {
        system.xi_offset = setup.feedback.measurement_noise * gauss(rng);
        system.eta_offset = setup.feedback.measurement_noise * gauss(rng);
    }

    TrajectoryRecord rec;
    rec.initial = initial;
    rec.initial.t = 0.0;
    rec.initial_energy_K = shifted_energy_kelvin(rec.initial, model);
    const double w3_0 = initial.omega3;
    const double e0 = total_energy_above_minimum(rec.initial, model);
    const double e_scale = e0 > 0.0 ? e0 : 1.0;

    auto make_sample = [&](double t, const EulerVector& y) {
        TrajectorySample s;
        s.t = t;
        s.y = y;
        const EulerState st = from_vector(y, t);
        s.energy_K = shifted_energy_kelvin(st, model);
        s.omega3_drift = w3_0 != 0.0 ? (y[5] - w3_0) / std::abs(w3_0) : y[5];
        s.energy_drift = (total_energy_above_minimum(st, model) - e0) / e_scale;
        s.q24 = precession_invariant(st, setup.particle);
        return s;
    };

    // segment boundaries: schedule changes and the start of the dense tail
    std::vector<double> cuts;
    for (const auto& step : setup.feedback.schedule) {
        if (step.t_start > 0.0 && step.t_start < setup.duration) cuts.push_back(step.t_start);
    }
    const double tail_start = setup.duration - setup.tail_duration;
    if (setup.tail_duration > 0.0 && tail_start > 0.0) cuts.push_back(tail_start);
    for (const auto& [a, b] : setup.dense_windows) {
        if (a > 0.0) cuts.push_back(a);
        if (b < setup.duration) cuts.push_back(b);
    }
    rec.windows.resize(setup.dense_windows.size());
    cuts.push_back(setup.duration);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double next_coarse = 0.0;
    std::uint64_t coarse_index = 0;
    const double coarse_eps = 1e-9 * setup.sample_dt;
    bool in_tail = setup.tail_duration > 0.0 && tail_start <= 0.0;
    std::vector<TrajectorySample>* window = nullptr;
    auto observe = [&](double t, const EulerVector& y) {
        const bool dup_coarse = !rec.samples.empty() && t <= rec.samples.back().t;
        if (!dup_coarse && t >= next_coarse - coarse_eps) {
            rec.samples.push_back(make_sample(t, y));
            ++coarse_index;
            next_coarse = static_cast<double>(coarse_index) * setup.sample_dt;
        }
        if (in_tail && (rec.tail.empty() || t > rec.tail.back().t)) {
            rec.tail.push_back(make_sample(t, y));
        }
        if (window && (window->empty() || t > window->back().t)) {
            window->push_back(make_sample(t, y));
        }
    };

    auto hook = [&](double, double dt, EulerVector& y) {
        HookResult result = HookResult::unchanged;
        if (noisy) {
            if (measure_noise) {
                system.xi_offset = setup.feedback.measurement_noise * gauss(rng);
                system.eta_offset = setup.feedback.measurement_noise * gauss(rng);
                result = HookResult::modified;
            }
            if (setup.noise.gas) {
                langevin_update(y, damping, setup.noise.gas_temperature, setup.particle, dt, rng);
                result = HookResult::modified;
            }
            if (setup.noise.shot) {
                shot_noise_update(y, setup.noise, dt, rng);
                result = HookResult::modified;
            }
        }
        const double sb = std::sin(y[1]);
        const double kin = 0.5 * model.inertia_x * (y[3] * y[3] * sb * sb + y[4] * y[4]);
        const double eps = (kin + model.potential_above_minimum(y[0], y[1])) / constants::boltzmann;
        if (eps > barrier) {
            return HookResult::stop;
        }
        return result;
    };

    EulerVector y = to_vector(rec.initial);
    double t = 0.0;
    for (double t_end : cuts) {
        system.chi_r2 = chi_at(t, setup.feedback) * setup.particle.radius * setup.particle.radius;
        in_tail = setup.tail_duration > 0.0 && t >= tail_start - coarse_eps;
        window = nullptr;
        for (std::size_t k = 0; k < setup.dense_windows.size(); ++k) {
            const auto& [a, b] = setup.dense_windows[k];
            if (t >= a - coarse_eps && t_end <= b + coarse_eps) window = &rec.windows[k];
        }
        const double dt_out = in_tail || window ? setup.tail_dt : setup.sample_dt;
        const IntegrationSummary s = integrate<6>(t, y, t_end, dt_out, system, observe, icfg, hook);
        rec.steps += s.steps;
        rec.rejected += s.rejected;
        icfg.dt_init = std::clamp(s.dt_next, icfg.dt_min * 1.0000001, icfg.dt_max * 0.9999999);
        t = s.t_final;
        if (s.reason != Termination::completed) {
            rec.reason = s.reason;
            rec.message = s.message;
            break;
        }
    }
    if (setup.duration == 0.0) {
        observe(0.0, y);
    }
    rec.final_state = from_vector(y, t);
    rec.final_energy_K = shifted_energy_kelvin(rec.final_state, model);
    return rec;
}

}  // namespace ndb
