//! Composite 7/15-point Gauss-Kronrod rule on arbitrary panel breakpoints.
//!
//! The Kronrod sum is the estimate; `|Kronrod - Gauss|` per panel, summed,
//! is a conservative error bound.

// constants as tabulated
#![allow(clippy::excessive_precision)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const NODES_PER_PANEL: usize = 15;

/// Nodes and weights of a composite rule, laid out panel by panel.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub kronrod: Vec<f64>,
    /// Zero on nodes that belong only to the Kronrod extension.
    pub gauss: Vec<f64>,
}

impl PanelRule {
    /// `breakpoints` must be strictly increasing with at least two entries.
    pub fn new(breakpoints: &[f64]) -> Self {
        assert!(breakpoints.len() >= 2, "need at least one panel");
        let n_panels = breakpoints.len() - 1;
        let mut nodes = Vec::with_capacity(n_panels * NODES_PER_PANEL);
        let mut kronrod = Vec::with_capacity(n_panels * NODES_PER_PANEL);
        let mut gauss = Vec::with_capacity(n_panels * NODES_PER_PANEL);
        for w in breakpoints.windows(2) {
            debug_assert!(w[1] > w[0]);
            let center = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            // 7 nodes left of centre, centre, 7 right
            for j in 0..7 {
                nodes.push(center - half * XGK[j]);
                kronrod.push(half * WGK[j]);
                gauss.push(if j % 2 == 1 { half * WG[j / 2] } else { 0.0 });
            }
            nodes.push(center);
            kronrod.push(half * WGK[7]);
            gauss.push(half * WG[3]);
            for j in (0..7).rev() {
                nodes.push(center + half * XGK[j]);
                kronrod.push(half * WGK[j]);
                gauss.push(if j % 2 == 1 { half * WG[j / 2] } else { 0.0 });
            }
        }
        PanelRule {
            nodes,
            kronrod,
            gauss,
        }
    }

    pub fn n_panels(&self) -> usize {
        self.nodes.len() / NODES_PER_PANEL
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate a real function; returns (estimate, error bound).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let mut total = 0.0;
        let mut err = 0.0;
        for panel in 0..self.n_panels() {
            let r = panel * NODES_PER_PANEL..(panel + 1) * NODES_PER_PANEL;
            let (mut k, mut g) = (0.0, 0.0);
            for i in r {
                let v = f(self.nodes[i]);
                k += self.kronrod[i] * v;
                g += self.gauss[i] * v;
            }
            total += k;
            err += (k - g).abs();
        }
        (total, err)
    }
}

/// Uniform breakpoints on `[lo, hi]`.
pub fn uniform_breakpoints(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    let h = (hi - lo) / panels as f64;
    let mut bp: Vec<f64> = (0..panels).map(|i| lo + i as f64 * h).collect();
    bp.push(hi);
    bp
}
