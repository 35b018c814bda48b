//! Reference values the benchmark runs are compared against.
//!
//! Stress rows use the Nye order `(xx, yy, zz, xy, xz, yz)` and list the
//! elements in mesh order.

/// Homogeneous St. Venant–Kirchhoff stress of the membrane patch (N/mm²).
pub const MEMBRANE_ANALYTIC: [f64; 6] = [1334.20, 1334.20, 0.0, 400.50, 0.0, 0.0];

/// Published single-point stresses with the linearized inverse Jacobian, membrane patch.
pub const MEMBRANE_Q1STC: [[f64; 6]; 5] = [
    [1338.90, 1335.50, -2.1025, 403.75, 0.0389, -0.35487],
    [1332.90, 1341.10, 2.1957, 389.11, -0.2729, -0.05452],
    [1314.20, 1326.30, -5.1731, 383.35, 0.0007, -0.32121],
    [1376.60, 1344.60, 10.6170, 401.50, 0.0543, 0.09283],
    [1313.30, 1325.00, -4.9051, 426.17, 0.1197, 0.22888],
];

/// Homogeneous stress of the seven-element solid patch (N/mm²).
pub const SOLID_ANALYTIC: [f64; 6] = [2001.50, 2001.50, 2001.50, 400.50, 400.50, 400.50];

pub const SOLID_Q1STC: [[f64; 6]; 7] = [
    [1715.20, 1687.40, 1689.60, 403.96, 378.29, 350.34],
    [2127.00, 1967.80, 1974.10, 416.39, 375.52, 386.41],
    [1969.50, 2090.60, 1963.20, 401.03, 401.58, 414.28],
    [2167.50, 2000.80, 1993.80, 396.76, 400.07, 384.76],
    [1982.20, 2135.60, 1985.50, 389.54, 388.65, 386.64],
    [1971.70, 1983.20, 2111.40, 391.83, 420.10, 411.80],
    [1972.20, 1955.90, 2103.20, 407.83, 426.18, 438.12],
];

pub const SOLID_Q1STC_PLUS: [[f64; 6]; 7] = [
    [1713.50, 1710.00, 1707.00, 375.12, 367.89, 362.46],
    [2149.60, 1989.90, 1988.70, 411.63, 388.84, 391.73],
    [1973.40, 2098.10, 1961.70, 405.65, 395.17, 409.72],
    [2180.40, 2002.50, 2004.10, 419.72, 399.39, 390.46],
    [1961.20, 2092.30, 1982.60, 401.84, 389.43, 396.61],
    [1963.10, 1980.40, 2084.30, 389.29, 419.18, 409.13],
    [1969.90, 1964.00, 2114.30, 393.07, 427.03, 421.17],
];

/// Force normalization of the elasto-plastic membrane curves (N).
pub const MEMBRANE_F0: f64 = 0.028914;

/// `|u_y|` of the marked cube node against the element count.
pub const CUBE_Q1: [(usize, f64); 4] = [(512, 0.29462), (1000, 0.34098), (1728, 0.37672), (5832, 0.44312)];
pub const CUBE_Q1STC_PLUS: [(usize, f64); 4] = [(512, 0.50823), (1000, 0.51078), (1728, 0.51097), (5832, 0.51197)];

const MEMBRANE_PLASTIC_CSV: &str = include_str!("../data/membrane_plastic.csv");

/// A sampled curve `F/F0` over a displacement.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub label: String,
    pub u: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl Trace {
    /// Value at `u` by linear interpolation (clamped at the ends).
    pub fn at(&self, u: f64) -> f64 {
        let k = self.u.partition_point(|&x| x < u);
        if k == 0 {
            return self.normalized[0];
        }
        if k == self.u.len() {
            return *self.normalized.last().unwrap();
        }
        let (x0, x1) = (self.u[k - 1], self.u[k]);
        let t = (u - x0) / (x1 - x0);
        self.normalized[k - 1] * (1.0 - t) + self.normalized[k] * t
    }
}

/// Reference curves of the elasto-plastic membrane patch, one per formulation.
///
/// Labels are `Q1STc`, `Q1STc+`, `U-P-SBFEM` and `Q1`.
pub fn membrane_plastic_traces() -> Vec<Trace> {
    let mut lines = MEMBRANE_PLASTIC_CSV.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().expect("trace header").split(',').collect();
    let mut traces: Vec<Trace> =
        header[1..].iter().map(|l| Trace { label: l.to_string(), u: Vec::new(), normalized: Vec::new() }).collect();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().expect("numeric trace entry")).collect();
        for (k, t) in traces.iter_mut().enumerate() {
            t.u.push(v[0]);
            t.normalized.push(v[k + 1]);
        }
    }
    traces
}

pub fn membrane_plastic_trace(label: &str) -> Option<Trace> {
    membrane_plastic_traces().into_iter().find(|t| t.label == label)
}
