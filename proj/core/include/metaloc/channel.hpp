#pragma once

#include <metaloc/scenario.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace metaloc {

/// Parameters of the synthetic indoor channel. Each scenario seed draws its own
/// room: transmitter position, obstacle walls, point scatterers, Rician K-factor,
/// per-antenna gains and noise level, all within the ranges below. The transmitter
/// is always placed on the same side of the grid, as in a measurement campaign
/// that repeats one setup in different rooms.
struct ChannelConfig {
    Grid grid;
    std::size_t samples_per_rp = 40;

    double path_loss_exponent = 2.5;
    double reference_distance_cm = 100.0;
    double carrier_ghz = 5.32;
    double bandwidth_mhz = 16.25; // span of the 30 grouped subcarriers
    double antenna_spacing_cm = 2.8;

    double room_margin_cm = 300.0; // room extends this far beyond the grid on every side
    double min_tx_clearance_cm = 40.0;
    // The transmitter stands in front of the first grid row: x in [-max, -min], y spans the grid
    // widened by the lateral slack on both sides.
    double tx_standoff_min_cm = 80.0;
    double tx_standoff_max_cm = 260.0;
    double tx_lateral_cm = 60.0;
    /// Pins the transmitter instead of drawing it; must still respect the clearance.
    std::optional<Position> transmitter_cm;

    std::size_t min_scatterers = 4;
    std::size_t max_scatterers = 10;
    std::size_t max_walls = 3;
    double wall_loss_db_min = 2.0;
    double wall_loss_db_max = 10.0;
    // K-factor at the reference distance, falling off by the slope per decade of distance.
    double rician_k_db_min = 0.0;
    double rician_k_db_max = 9.0;
    double rician_k_slope_db = 12.0;
    double antenna_gain_spread = 0.25; // gains ~ U(1 - spread, 1 + spread)

    // Per-burst variation around the fixed reference-point fingerprint.
    double position_jitter_cm = 0.3;
    double phase_jitter_rad = 0.15;
    double noise_min = 0.01; // additive noise std relative to the scenario mean amplitude
    double noise_max = 0.06;

    void validate() const;
};

/// Deterministic per (seed, config). Throws ConfigError on degenerate geometry.
Scenario generate_scenario(std::uint64_t seed, const ChannelConfig& config, std::string id = {});

} // namespace metaloc
