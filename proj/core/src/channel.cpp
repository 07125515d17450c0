#include <metaloc/channel.hpp>
#include <metaloc/errors.hpp>
#include <metaloc/rng.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace metaloc {

namespace {

constexpr double kLightSpeedCmPerS = 2.99792458e10;

struct Point {
    double x, y;
};

struct Wall {
    Point a, b;
    double amplitude_factor; // 10^(-loss_db / 20)
};

struct Scatterer {
    Point at;
    double reflectivity;
    double phase;
};

double distance(Point p, Point q) { return std::hypot(p.x - q.x, p.y - q.y); }

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool segments_cross(Point p1, Point p2, Point q1, Point q2) {
    const double d1 = cross(q1, q2, p1), d2 = cross(q1, q2, p2);
    const double d3 = cross(p1, p2, q1), d4 = cross(p1, p2, q2);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double wall_attenuation(Point from, Point to, const std::vector<Wall>& walls) {
    double f = 1.0;
    for (const auto& w : walls) {
        if (segments_cross(from, to, w.a, w.b)) f *= w.amplitude_factor;
    }
    return f;
}

struct Room {
    Point tx;
    std::vector<Wall> walls;
    std::vector<Scatterer> scatterers;
    double rician_k_db; // at the reference distance
    double orientation; // receive array axis
    std::array<double, model::kAntennas> gains;
    double noise_rel;
};

} // namespace

void ChannelConfig::validate() const {
    if (grid.rows * grid.cols < 2) throw ConfigError("channel: grid needs at least 2 reference points");
    if (!(grid.spacing_cm > 0.0)) throw ConfigError("channel: grid spacing must be positive");
    if (samples_per_rp < 2) throw ConfigError("channel: need at least 2 samples per reference point");
    if (!(path_loss_exponent > 0.0)) throw ConfigError("channel: path-loss exponent must be positive");
    if (min_scatterers > max_scatterers) throw ConfigError("channel: min_scatterers > max_scatterers");
    if (noise_min < 0.0 || noise_max < noise_min) throw ConfigError("channel: invalid noise range");
    if (!(room_margin_cm > min_tx_clearance_cm)) throw ConfigError("channel: room margin too small");
    if (!(tx_standoff_min_cm >= min_tx_clearance_cm) || tx_standoff_max_cm < tx_standoff_min_cm ||
        tx_standoff_max_cm > room_margin_cm || tx_lateral_cm < 0.0) {
        throw ConfigError("channel: transmitter standoff range must lie between the clearance and the room margin");
    }
    if (transmitter_cm) {
        for (const auto& p : reference_points(grid)) {
            if (std::hypot(p[0] - (*transmitter_cm)[0], p[1] - (*transmitter_cm)[1]) < min_tx_clearance_cm) {
                throw ConfigError("channel: transmitter closer than the clearance to a reference point");
            }
        }
    }
}

Scenario generate_scenario(std::uint64_t seed, const ChannelConfig& config, std::string id) {
    config.validate();
    Rng rng = make_rng(seed, "data");
    auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    constexpr double two_pi = 2.0 * std::numbers::pi;

    const auto points = reference_points(config.grid);
    const double extent_x = static_cast<double>(config.grid.rows - 1) * config.grid.spacing_cm;
    const double extent_y = static_cast<double>(config.grid.cols - 1) * config.grid.spacing_cm;
    const double x0 = -config.room_margin_cm, x1 = extent_x + config.room_margin_cm;
    const double y0 = -config.room_margin_cm, y1 = extent_y + config.room_margin_cm;
    auto random_point = [&] { return Point{uniform(x0, x1), uniform(y0, y1)}; };

    Room room;
    room.tx = {-uniform(config.tx_standoff_min_cm, config.tx_standoff_max_cm),
               uniform(-config.tx_lateral_cm, extent_y + config.tx_lateral_cm)};
    if (config.transmitter_cm) room.tx = {(*config.transmitter_cm)[0], (*config.transmitter_cm)[1]};
    const auto wall_count = std::uniform_int_distribution<std::size_t>(0, config.max_walls)(rng);
    for (std::size_t i = 0; i < wall_count; ++i) {
        const Point a = random_point();
        const double len = uniform(100.0, 400.0), ang = uniform(0.0, two_pi);
        const double loss_db = uniform(config.wall_loss_db_min, config.wall_loss_db_max);
        room.walls.push_back({a, {a.x + len * std::cos(ang), a.y + len * std::sin(ang)}, std::pow(10.0, -loss_db / 20.0)});
    }
    const auto scatter_count =
        std::uniform_int_distribution<std::size_t>(config.min_scatterers, config.max_scatterers)(rng);
    for (std::size_t i = 0; i < scatter_count; ++i) {
        room.scatterers.push_back({random_point(), uniform(0.2, 1.0), uniform(0.0, two_pi)});
    }
    room.rician_k_db = uniform(config.rician_k_db_min, config.rician_k_db_max);
    room.orientation = uniform(0.0, std::numbers::pi);
    for (double& g : room.gains) g = uniform(1.0 - config.antenna_gain_spread, 1.0 + config.antenna_gain_spread);
    room.noise_rel = uniform(config.noise_min, config.noise_max);

    std::array<double, model::kSubcarriers> freq_hz{};
    for (std::size_t s = 0; s < freq_hz.size(); ++s) {
        const double offset = (static_cast<double>(s) / (freq_hz.size() - 1) - 0.5) * config.bandwidth_mhz * 1e6;
        freq_hz[s] = config.carrier_ghz * 1e9 + offset;
    }

    const double d0 = config.reference_distance_cm;
    const double half_exp = config.path_loss_exponent / 2.0;

    // Amplitude at one receive antenna position, with per-path phase perturbations.
    auto channel = [&](Point rx, std::span<const double> path_phase_jitter, std::span<double> out) {
        const double d_los = distance(room.tx, rx);
        const double envelope = std::pow(std::max(d_los, 10.0) / d0, -half_exp) * wall_attenuation(room.tx, rx, room.walls);
        const double k_db = room.rician_k_db - config.rician_k_slope_db * std::log10(std::max(d_los, 10.0) / d0);
        const double rician_k = std::pow(10.0, k_db / 10.0);
        const double los_weight = std::sqrt(rician_k / (rician_k + 1.0));
        const double nlos_weight = std::sqrt(1.0 / (rician_k + 1.0));
        for (std::size_t s = 0; s < out.size(); ++s) {
            const double k = two_pi * freq_hz[s] / kLightSpeedCmPerS;
            std::complex<double> h = los_weight * std::polar(1.0, -k * d_los);
            std::complex<double> diffuse{0.0, 0.0};
            double diffuse_power = 0.0;
            for (std::size_t m = 0; m < room.scatterers.size(); ++m) {
                const auto& sc = room.scatterers[m];
                const double leg1 = distance(room.tx, sc.at), leg2 = distance(sc.at, rx);
                const double path = leg1 + leg2;
                // Excess path loss relative to line of sight.
                const double rel = std::pow(std::max(path, 10.0) / std::max(d_los, 10.0), -half_exp) *
                                   wall_attenuation(room.tx, sc.at, room.walls) *
                                   wall_attenuation(sc.at, rx, room.walls);
                diffuse += sc.reflectivity * rel * std::polar(1.0, -k * path + sc.phase + path_phase_jitter[m]);
                diffuse_power += sc.reflectivity * sc.reflectivity * rel * rel;
            }
            // Unit diffuse power at every receiver, so K alone sets the line-of-sight share.
            h += nlos_weight * diffuse / std::sqrt(diffuse_power);
            out[s] = envelope * std::abs(h);
        }
    };

    Scenario scenario;
    scenario.id = id.empty() ? "scenario_" + std::to_string(seed) : std::move(id);
    scenario.grid = config.grid;
    scenario.samples.reserve(points.size() * config.samples_per_rp);

    const double ax = std::cos(room.orientation), ay = std::sin(room.orientation);
    std::normal_distribution<double> standard(0.0, 1.0);
    std::vector<double> jitter(room.scatterers.size());
    std::vector<Amplitudes> clean(points.size() * config.samples_per_rp);

    for (std::size_t rp = 0; rp < points.size(); ++rp) {
        for (std::size_t b = 0; b < config.samples_per_rp; ++b) {
            const double jx = config.position_jitter_cm * standard(rng);
            const double jy = config.position_jitter_cm * standard(rng);
            for (double& j : jitter) j = config.phase_jitter_rad * standard(rng);
            Amplitudes& amp = clean[rp * config.samples_per_rp + b];
            for (std::size_t a = 0; a < model::kAntennas; ++a) {
                const double off = (static_cast<double>(a) - 1.0) * config.antenna_spacing_cm;
                const Point rx{points[rp][0] + jx + off * ax, points[rp][1] + jy + off * ay};
                std::span<double> row(amp.data() + a * model::kSubcarriers, model::kSubcarriers);
                channel(rx, jitter, row);
                for (double& v : row) v *= room.gains[a];
            }
        }
    }

    double mean_amp = 0.0;
    for (const auto& amp : clean)
        for (double v : amp) mean_amp += v;
    mean_amp /= static_cast<double>(clean.size() * model::kSampleSize);
    const double noise_sd = room.noise_rel * mean_amp;

    for (std::size_t rp = 0; rp < points.size(); ++rp) {
        for (std::size_t b = 0; b < config.samples_per_rp; ++b) {
            Sample sample;
            sample.rp = rp;
            sample.pos = points[rp];
            sample.amp = clean[rp * config.samples_per_rp + b];
            for (double& v : sample.amp) v = std::max(0.0, v + noise_sd * standard(rng));
            scenario.samples.push_back(sample);
        }
    }
    return scenario;
}

} // namespace metaloc
