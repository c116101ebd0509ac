//! Phase-adaptive composite Gauss-Legendre panels on the spectral ray.
//!
//! The ray integrands carry the phase e^{i rho^3 t} (plus an O(rho x) kernel
//! phase), so panel widths shrink like pi / (3 rho^2 T + L): each panel sees a
//! bounded phase change and the 12-point rule resolves it far below the
//! solver tolerances.

/// 12-point Gauss-Legendre nodes/weights on [-1, 1].
pub const GL12_NODES: [f64; 12] = [
    -0.981560634246719251,
    -0.904117256370474857,
    -0.769902674194304687,
    -0.587317954286617447,
    -0.367831498998180194,
    -0.125233408511468916,
    0.125233408511468916,
    0.367831498998180194,
    0.587317954286617447,
    0.769902674194304687,
    0.904117256370474857,
    0.981560634246719251,
];

pub const GL12_WEIGHTS: [f64; 12] = [
    0.047175336386511827,
    0.106939325995318431,
    0.160078328543346226,
    0.203167426723065922,
    0.233492536538354809,
    0.249147045813402785,
    0.249147045813402785,
    0.233492536538354809,
    0.203167426723065922,
    0.160078328543346226,
    0.106939325995318431,
    0.047175336386511827,
];

/// Max phase change per panel; 12-point GL integrates e^{i phi} over this
/// span to ~1e-13 relative.
pub const PHASE_BUDGET: f64 = std::f64::consts::PI;

/// Head panel width, resolving the O(1)-scale kernel-ratio variation in rho.
pub const HEAD_WIDTH: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub edges: Vec<f64>,
}

impl PanelRule {
    pub fn empty(start: f64) -> Self {
        PanelRule { nodes: Vec::new(), weights: Vec::new(), edges: vec![start] }
    }

    pub fn end(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    /// Append one panel of phase-limited width starting at the current end.
    /// Returns the (node, weight) index range of the new panel.
    pub fn push_panel(&mut self, t_phase: f64, x_span: f64) -> std::ops::Range<usize> {
        let a = self.end();
        let rate = 3.0 * a * a * t_phase + x_span;
        let width = if rate > 0.0 { (PHASE_BUDGET / rate).min(HEAD_WIDTH) } else { HEAD_WIDTH };
        let b = a + width;
        let start = self.nodes.len();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in GL12_NODES.iter().zip(GL12_WEIGHTS) {
            self.nodes.push(mid + half * x);
            self.weights.push(w * half);
        }
        self.edges.push(b);
        start..self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Fixed-extent rule covering [0, r_max] under the phase-width law.
pub fn phase_adaptive_rule(t_phase: f64, x_span: f64, r_max: f64) -> PanelRule {
    let mut rule = PanelRule::empty(0.0);
    while rule.end() < r_max {
        rule.push_panel(t_phase, x_span);
    }
    rule
}
