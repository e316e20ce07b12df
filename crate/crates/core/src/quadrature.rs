//! Fixed quadrature rules for source projections and field averages.
//!
//! 1D integrals use 16-point Gauss-Legendre per cell. 2D integrals use a
//! degree-5 seven-point triangle rule applied compositely on a uniform 4^level
//! subdivision of each triangle; the default level is chosen so that the
//! smooth built-in sources are resolved well below the 1e-6 oracle tolerances
//! already on coarse meshes.

/// Default subdivision level for composite triangle quadrature.
pub const DEFAULT_TRI_LEVEL: usize = 4;

/// 16-point Gauss-Legendre nodes (positive half) and weights on [-1, 1].
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_54,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_79,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_096,
];

/// Integrate `f` over `[a, b]` with 16-point Gauss-Legendre.
pub fn gauss16(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..8 {
        acc += GL16_W[k] * (f(mid + half * GL16_X[k]) + f(mid - half * GL16_X[k]));
    }
    acc * half
}

/// Integrate over [0,1] splitting at the given sorted breakpoints.
pub fn gauss16_piecewise(breaks: &[f64], f: &mut impl FnMut(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            acc += gauss16(w[0], w[1], f);
        }
    }
    acc
}

/// Degree-5 seven-point rule on a triangle, barycentric coordinates and
/// weights (weights sum to 1; multiply by triangle area).
const TRI7: [([f64; 3], f64); 7] = {
    const A: f64 = 0.059_715_871_789_769_82; // (6 - sqrt(15)) / 21
    const B: f64 = 0.470_142_064_105_115_1; // (6 + sqrt(15)) / 21  (paired coordinate)
    const C: f64 = 0.797_426_985_353_087_4; // (9 + 2 sqrt(15)) / 21
    const D: f64 = 0.101_286_507_323_456_34; // (9 - 2 sqrt(15)) / 21 (paired)
    const WA: f64 = 0.132_394_152_788_506_2; // (155 + sqrt(15)) / 1200
    const WD: f64 = 0.125_939_180_544_827_14; // (155 - sqrt(15)) / 1200
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A, B, B], WA),
        ([B, A, B], WA),
        ([B, B, A], WA),
        ([C, D, D], WD),
        ([D, C, D], WD),
        ([D, D, C], WD),
    ]
};

type Pt = (f64, f64);

fn tri_area(a: Pt, b: Pt, c: Pt) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs()
}

fn tri7_apply(a: Pt, b: Pt, c: Pt, area: f64, f: &mut impl FnMut(f64, f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for (bary, w) in TRI7.iter() {
        let x = bary[0] * a.0 + bary[1] * b.0 + bary[2] * c.0;
        let y = bary[0] * a.1 + bary[1] * b.1 + bary[2] * c.1;
        acc += w * f(x, y);
    }
    acc * area
}

fn subdivide(
    a: Pt,
    b: Pt,
    c: Pt,
    level: usize,
    area: f64,
    f: &mut impl FnMut(f64, f64) -> f64,
) -> f64 {
    if level == 0 {
        return tri7_apply(a, b, c, area, f);
    }
    let mab = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
    let mbc = (0.5 * (b.0 + c.0), 0.5 * (b.1 + c.1));
    let mca = (0.5 * (c.0 + a.0), 0.5 * (c.1 + a.1));
    let q = 0.25 * area;
    subdivide(a, mab, mca, level - 1, q, f)
        + subdivide(mab, b, mbc, level - 1, q, f)
        + subdivide(mca, mbc, c, level - 1, q, f)
        + subdivide(mab, mbc, mca, level - 1, q, f)
}

/// Composite triangle quadrature at a fixed subdivision level.
#[derive(Debug, Clone, Copy)]
pub struct TriQuad {
    pub level: usize,
}

impl Default for TriQuad {
    fn default() -> Self {
        Self {
            level: DEFAULT_TRI_LEVEL,
        }
    }
}

impl TriQuad {
    pub fn new(level: usize) -> Self {
        Self { level }
    }

    pub fn integrate(&self, a: Pt, b: Pt, c: Pt, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        subdivide(a, b, c, self.level, tri_area(a, b, c), &mut f)
    }

    /// Visit every quadrature point with its weight (weights sum to the
    /// triangle area). Lets callers accumulate several integrals in one pass.
    pub fn for_each_point(&self, a: Pt, b: Pt, c: Pt, visit: &mut impl FnMut(f64, f64, f64)) {
        fn walk(
            a: Pt,
            b: Pt,
            c: Pt,
            level: usize,
            area: f64,
            visit: &mut impl FnMut(f64, f64, f64),
        ) {
            if level == 0 {
                for (bary, w) in TRI7.iter() {
                    let x = bary[0] * a.0 + bary[1] * b.0 + bary[2] * c.0;
                    let y = bary[0] * a.1 + bary[1] * b.1 + bary[2] * c.1;
                    visit(x, y, w * area);
                }
                return;
            }
            let mab = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
            let mbc = (0.5 * (b.0 + c.0), 0.5 * (b.1 + c.1));
            let mca = (0.5 * (c.0 + a.0), 0.5 * (c.1 + a.1));
            let q = 0.25 * area;
            walk(a, mab, mca, level - 1, q, visit);
            walk(mab, b, mbc, level - 1, q, visit);
            walk(mca, mbc, c, level - 1, q, visit);
            walk(mab, mbc, mca, level - 1, q, visit);
        }
        walk(a, b, c, self.level, tri_area(a, b, c), visit);
    }
}
