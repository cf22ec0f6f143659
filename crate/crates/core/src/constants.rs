//! Exact SI constants. Every formula in the crate works in SI units.

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant in J·s, derived from the exact Planck constant
/// rather than its rounded decimal.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant in J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Literature binding energy of the Nb 3d5/2 line in lithium niobate, eV.
pub const NB3D52_REFERENCE_EV: f64 = 207.3;

/// Nominal O 1s band centers (metal oxide, C=O, C–O) in eV.
pub const O1S_BAND_CENTERS_EV: [f64; 3] = [530.0, 531.5, 533.0];

/// Alternative metal-oxide O 1s position quoted for Nb2O5, eV.
pub const O1S_NB2O5_ALT_EV: f64 = 530.5;

/// Zero-steering drive orientations on x-cut LN relative to crystal Z, in
/// degrees. Reference values only; they come from an elastic simulation that
/// this crate does not perform.
pub const XCUT_ZERO_STEERING_DEG: [f64; 2] = [-30.0, 75.0];
