//! Directional filter bank built from a binary tree of two-channel quincunx
//! fan filter banks.
//!
//! Every node of the tree owns the samples of one coset of an integer
//! lattice inside the finite `rows × cols` grid. A split partitions that
//! coset into the two cosets of its quincunx sublattice and runs a ladder
//! (lifting) network between them, so each split is critically sampled and
//! exactly invertible whatever the grid size. Lattice bases rotate by 45°
//! from the first to the second level; at the third level each quadrant
//! wedge is sheared so the split bisects it, as in the Bamberger–Smith
//! construction.
//!
//! Filters act along the lattice generators in the original pixel grid.
//! Out-of-grid taps use the periodic column extension when enabled, then a
//! whole-point row reflection, then the point reflection through the
//! target; a tap with no valid source is dropped. Because lookups only ever
//! read the other coset, this never affects invertibility.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;

use super::filters::DfbFilter;
use super::lp::reflect;
use crate::error::{IrisError, Result};

type Vec2 = (i64, i64);

/// One directional subband: values in row-major order of their grid
/// positions, with a matrix shape (rows × cols) when the positions form a
/// regular grid, else 1 × n.
#[derive(Debug, Clone, PartialEq)]
pub struct Subband {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_matrix(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.rows, self.cols), self.values.clone())
            .expect("subband shape matches its length")
    }

    pub fn zeroed(&self) -> Subband {
        Subband {
            rows: self.rows,
            cols: self.cols,
            values: vec![0.0; self.values.len()],
        }
    }
}

/// Output of [`dfb_decompose`]: the subbands plus what is needed to invert.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalBands {
    pub dims: (usize, usize),
    pub periodic_cols: bool,
    pub filter: DfbFilter,
    pub subbands: Vec<Subband>,
}

impl DirectionalBands {
    pub fn coefficient_count(&self) -> usize {
        self.subbands.iter().map(Subband::len).sum()
    }
}

#[derive(Debug)]
enum Op {
    Lift {
        targets: Vec<u32>,
        offsets: Vec<u32>,
        sources: Vec<u32>,
        weights: Vec<f64>,
    },
    Scale {
        positions: Vec<u32>,
        factor: f64,
    },
}

#[derive(Debug)]
struct Plan {
    rows: usize,
    cols: usize,
    ops: Vec<Op>,
    /// Flat positions of each subband, already in direction order.
    leaves: Vec<Vec<u32>>,
    shapes: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct PlanKey {
    rows: usize,
    cols: usize,
    n_dirs: usize,
    periodic: bool,
    filter: DfbFilter,
}

/// Leaves in tree order → direction order (wedges sorted by the angle of
/// the frequency vector, starting at the horizontal-frequency wedge).
const DIRECTION_ORDER_2: [usize; 2] = [1, 0];
const DIRECTION_ORDER_4: [usize; 4] = [3, 1, 0, 2];
const DIRECTION_ORDER_8: [usize; 8] = [6, 7, 3, 2, 0, 1, 5, 4];

/// Sheared bases for the third split of the four quadrant wedges.
const SHEAR_BASES: [[Vec2; 2]; 4] = [
    [(0, 2), (2, 2)],
    [(0, 2), (2, -2)],
    [(2, 0), (2, 2)],
    [(2, 0), (2, -2)],
];

struct Node {
    positions: Vec<u32>,
    origin: Vec2,
    basis: [Vec2; 2],
}

fn in_lattice(d: Vec2, basis: &[Vec2; 2]) -> bool {
    let [s1, s2] = *basis;
    let det = s1.0 * s2.1 - s1.1 * s2.0;
    let x = d.0 * s2.1 - d.1 * s2.0;
    let y = s1.0 * d.1 - s1.1 * d.0;
    x % det == 0 && y % det == 0
}

fn sublattice(basis: &[Vec2; 2]) -> [Vec2; 2] {
    let [v1, v2] = *basis;
    [(v1.0 + v2.0, v1.1 + v2.1), (v1.0 - v2.0, v1.1 - v2.1)]
}

struct Grid<'a> {
    rows: usize,
    cols: usize,
    periodic: bool,
    tag: &'a [u8],
}

impl Grid<'_> {
    fn flat(&self, r: i64, c: i64) -> u32 {
        (r as usize * self.cols + c as usize) as u32
    }

    fn column(&self, c: i64) -> i64 {
        if (0..self.cols as i64).contains(&c) {
            c
        } else if self.periodic {
            c.rem_euclid(self.cols as i64)
        } else {
            reflect(c as isize, self.cols) as i64
        }
    }

    fn probe(&self, q: Vec2, want: u8) -> Option<u32> {
        let c = self.column(q.1);
        let mut rows = [q.0, q.0];
        rows[1] = reflect(q.0 as isize, self.rows) as i64;
        for r in rows {
            if (0..self.rows as i64).contains(&r) {
                let f = self.flat(r, c);
                if self.tag[f as usize] == want {
                    return Some(f);
                }
            }
        }
        None
    }

    fn locate(&self, p: Vec2, d: Vec2, want: u8) -> Option<u32> {
        self.probe((p.0 + d.0, p.1 + d.1), want)
            .or_else(|| self.probe((p.0 - d.0, p.1 - d.1), want))
    }
}

fn split_sizes(node: &Node, basis: &[Vec2; 2], cols: usize) -> (Vec<u32>, Vec<u32>) {
    let sub = sublattice(basis);
    let mut c0 = Vec::new();
    let mut c1 = Vec::new();
    for &f in &node.positions {
        let p = ((f as usize / cols) as i64, (f as usize % cols) as i64);
        if in_lattice((p.0 - node.origin.0, p.1 - node.origin.1), &sub) {
            c0.push(f);
        } else {
            c1.push(f);
        }
    }
    (c0, c1)
}

fn build_plan(key: PlanKey) -> Plan {
    let PlanKey {
        rows,
        cols,
        n_dirs,
        periodic,
        filter,
    } = key;
    let depth = n_dirs.trailing_zeros() as usize;
    let steps = filter.steps();
    let mut tag = vec![u8::MAX; rows * cols];
    let mut ops = Vec::new();
    let mut nodes = vec![Node {
        positions: (0..(rows * cols) as u32).collect(),
        origin: (0, 0),
        basis: [(0, 1), (1, 0)],
    }];
    for level in 0..depth {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for (k, node) in nodes.into_iter().enumerate() {
            let candidates: Vec<[Vec2; 2]> = if level >= 2 {
                vec![SHEAR_BASES[k], SHEAR_BASES[k ^ 2], node.basis]
            } else {
                vec![node.basis]
            };
            let mut chosen = None;
            for basis in &candidates {
                let (c0, c1) = split_sizes(&node, basis, cols);
                if !c0.is_empty() && !c1.is_empty() {
                    chosen = Some((*basis, c0, c1));
                    break;
                }
            }
            let (basis, c0, c1) = chosen.unwrap_or_else(|| {
                let (c0, c1) = split_sizes(&node, &candidates[0], cols);
                (candidates[0], c0, c1)
            });
            for &f in &c0 {
                tag[f as usize] = 0;
            }
            for &f in &c1 {
                tag[f as usize] = 1;
            }
            let grid = Grid {
                rows,
                cols,
                periodic,
                tag: &tag,
            };
            let [v1, v2] = basis;
            for step in &steps {
                let targets = if step.target == 0 { &c0 } else { &c1 };
                let want = 1 - step.target as u8;
                let mut offsets = Vec::with_capacity(targets.len() + 1);
                let mut sources = Vec::new();
                let mut weights = Vec::new();
                offsets.push(0u32);
                let half: Vec<(i64, f64)> = step
                    .half_taps
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &t)| [(2 * i as i64 + 1, t), (-(2 * i as i64 + 1), t)])
                    .collect();
                for &f in targets {
                    let p = ((f as usize / cols) as i64, (f as usize % cols) as i64);
                    for &(m2, cm) in &half {
                        for &(n2, cn) in &half {
                            let da = (m2 + n2) / 2;
                            let db = (m2 - n2) / 2;
                            let d = (da * v1.0 + db * v2.0, da * v1.1 + db * v2.1);
                            let sign = if db.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
                            if let Some(src) = grid.locate(p, d, want) {
                                sources.push(src);
                                weights.push(step.weight * cm * cn * sign);
                            }
                        }
                    }
                    offsets.push(sources.len() as u32);
                }
                ops.push(Op::Lift {
                    targets: targets.clone(),
                    offsets,
                    sources,
                    weights,
                });
            }
            let scale = filter.scale();
            if scale != 1.0 {
                ops.push(Op::Scale {
                    positions: c0.clone(),
                    factor: scale,
                });
                ops.push(Op::Scale {
                    positions: c1.clone(),
                    factor: 1.0 / scale,
                });
            }
            for &f in c0.iter().chain(c1.iter()) {
                tag[f as usize] = u8::MAX;
            }
            let sub = sublattice(&basis);
            next.push(Node {
                positions: c0,
                origin: node.origin,
                basis: sub,
            });
            next.push(Node {
                positions: c1,
                origin: (node.origin.0 + v1.0, node.origin.1 + v1.1),
                basis: sub,
            });
        }
        nodes = next;
    }
    let order: &[usize] = match n_dirs {
        2 => &DIRECTION_ORDER_2,
        4 => &DIRECTION_ORDER_4,
        _ => &DIRECTION_ORDER_8,
    };
    let mut leaves = Vec::with_capacity(n_dirs);
    let mut shapes = Vec::with_capacity(n_dirs);
    for &k in order {
        let mut pos = std::mem::take(&mut nodes[k].positions);
        pos.sort_unstable();
        shapes.push(leaf_shape(&pos, cols));
        leaves.push(pos);
    }
    Plan {
        rows,
        cols,
        ops,
        leaves,
        shapes,
    }
}

fn leaf_shape(sorted: &[u32], cols: usize) -> (usize, usize) {
    if sorted.is_empty() {
        return (0, 0);
    }
    let mut counts: Vec<usize> = Vec::new();
    let mut last_row = usize::MAX;
    for &f in sorted {
        let r = f as usize / cols;
        if r != last_row {
            counts.push(0);
            last_row = r;
        }
        *counts.last_mut().unwrap() += 1;
    }
    if counts.iter().all(|&n| n == counts[0]) {
        (counts.len(), counts[0])
    } else {
        (1, sorted.len())
    }
}

fn plan_for(key: PlanKey) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().expect("plan cache poisoned").get(&key) {
        return Arc::clone(p);
    }
    let plan = Arc::new(build_plan(key));
    cache
        .lock()
        .expect("plan cache poisoned")
        .entry(key)
        .or_insert(plan)
        .clone()
}

fn check_dirs(n_dirs: usize) -> Result<()> {
    match n_dirs {
        2 | 4 | 8 => Ok(()),
        other => Err(IrisError::UnsupportedDirectionCount(other)),
    }
}

fn run_forward(plan: &Plan, buf: &mut [f64]) {
    for op in &plan.ops {
        match op {
            Op::Lift {
                targets,
                offsets,
                sources,
                weights,
            } => {
                for (i, &t) in targets.iter().enumerate() {
                    let (a, b) = (offsets[i] as usize, offsets[i + 1] as usize);
                    let acc: f64 = sources[a..b]
                        .iter()
                        .zip(&weights[a..b])
                        .map(|(&s, &w)| w * buf[s as usize])
                        .sum();
                    buf[t as usize] += acc;
                }
            }
            Op::Scale { positions, factor } => {
                for &p in positions {
                    buf[p as usize] *= factor;
                }
            }
        }
    }
}

fn run_inverse(plan: &Plan, buf: &mut [f64]) {
    for op in plan.ops.iter().rev() {
        match op {
            Op::Lift {
                targets,
                offsets,
                sources,
                weights,
            } => {
                for (i, &t) in targets.iter().enumerate() {
                    let (a, b) = (offsets[i] as usize, offsets[i + 1] as usize);
                    let acc: f64 = sources[a..b]
                        .iter()
                        .zip(&weights[a..b])
                        .map(|(&s, &w)| w * buf[s as usize])
                        .sum();
                    buf[t as usize] -= acc;
                }
            }
            Op::Scale { positions, factor } => {
                for &p in positions {
                    buf[p as usize] /= factor;
                }
            }
        }
    }
}

/// Split `x` into `n_dirs` ∈ {2, 4, 8} directional subbands. The subband
/// sample counts always add up to the input sample count.
pub fn dfb_decompose(
    x: &Array2<f64>,
    n_dirs: usize,
    periodic_cols: bool,
    filter: DfbFilter,
) -> Result<DirectionalBands> {
    check_dirs(n_dirs)?;
    let (rows, cols) = x.dim();
    if rows == 0 || cols == 0 {
        return Err(IrisError::TooSmall(
            "empty input to the directional filter bank".into(),
        ));
    }
    let plan = plan_for(PlanKey {
        rows,
        cols,
        n_dirs,
        periodic: periodic_cols,
        filter,
    });
    let mut buf: Vec<f64> = x.iter().copied().collect();
    run_forward(&plan, &mut buf);
    let subbands = plan
        .leaves
        .iter()
        .zip(&plan.shapes)
        .map(|(pos, &(r, c))| Subband {
            rows: r,
            cols: c,
            values: pos.iter().map(|&p| buf[p as usize]).collect(),
        })
        .collect();
    Ok(DirectionalBands {
        dims: (rows, cols),
        periodic_cols,
        filter,
        subbands,
    })
}

/// Inverse of [`dfb_decompose`].
pub fn dfb_reconstruct(bands: &DirectionalBands) -> Result<Array2<f64>> {
    let n_dirs = bands.subbands.len();
    check_dirs(n_dirs)?;
    let (rows, cols) = bands.dims;
    let plan = plan_for(PlanKey {
        rows,
        cols,
        n_dirs,
        periodic: bands.periodic_cols,
        filter: bands.filter,
    });
    let mut buf = vec![0.0; rows * cols];
    for (k, (pos, sb)) in plan.leaves.iter().zip(&bands.subbands).enumerate() {
        if pos.len() != sb.values.len() {
            return Err(IrisError::DimMismatch(format!(
                "subband {k} holds {} samples, expected {}",
                sb.values.len(),
                pos.len()
            )));
        }
        for (&p, &v) in pos.iter().zip(&sb.values) {
            buf[p as usize] = v;
        }
    }
    run_inverse(&plan, &mut buf);
    Ok(Array2::from_shape_vec((plan.rows, plan.cols), buf).expect("plan dims"))
}

/// Grid position `(row, col)` of every coefficient of every subband, in the
/// same order as [`dfb_decompose`] returns them.
pub fn subband_sites(
    dims: (usize, usize),
    n_dirs: usize,
    periodic_cols: bool,
    filter: DfbFilter,
) -> Result<Vec<Vec<(usize, usize)>>> {
    check_dirs(n_dirs)?;
    let plan = plan_for(PlanKey {
        rows: dims.0,
        cols: dims.1,
        n_dirs,
        periodic: periodic_cols,
        filter,
    });
    Ok(plan
        .leaves
        .iter()
        .map(|pos| {
            pos.iter()
                .map(|&p| (p as usize / dims.1, p as usize % dims.1))
                .collect()
        })
        .collect())
}

/// Full-size directional components: component `k` is the reconstruction
/// from subband `k` alone. The components sum to `x`.
pub fn dfb_components(
    x: &Array2<f64>,
    n_dirs: usize,
    periodic_cols: bool,
    filter: DfbFilter,
) -> Result<Vec<Array2<f64>>> {
    let bands = dfb_decompose(x, n_dirs, periodic_cols, filter)?;
    (0..n_dirs)
        .map(|k| {
            let mut single = bands.clone();
            for (j, sb) in single.subbands.iter_mut().enumerate() {
                if j != k {
                    *sb = sb.zeroed();
                }
            }
            dfb_reconstruct(&single)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((r, c), |_| rng.gen_range(-1.0..1.0))
    }

    fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let num: f64 = (a - b).iter().map(|v| v * v).sum();
        let den: f64 = b.iter().map(|v| v * v).sum();
        (num / den.max(1e-300)).sqrt()
    }

    #[test]
    fn lattice_membership() {
        let quincunx = [(1, 1), (1, -1)];
        assert!(in_lattice((2, 0), &quincunx));
        assert!(in_lattice((1, 1), &quincunx));
        assert!(!in_lattice((1, 0), &quincunx));
        let rect = [(2, 0), (0, 4)];
        assert!(in_lattice((4, 8), &rect));
        assert!(!in_lattice((0, 2), &rect));
    }

    #[test]
    fn two_direction_strip_band_is_critically_sampled() {
        let x = random(8, 240, 1);
        let b = dfb_decompose(&x, 2, true, DfbFilter::Pkva).unwrap();
        assert_eq!(b.subbands.len(), 2);
        assert_eq!(b.coefficient_count(), 1920);
        for sb in &b.subbands {
            assert_eq!((sb.rows, sb.cols), (8, 120));
        }
    }

    #[test]
    fn four_direction_subbands_are_half_grids() {
        let x = random(4, 120, 2);
        let b = dfb_decompose(&x, 4, true, DfbFilter::Pkva).unwrap();
        for sb in &b.subbands {
            assert_eq!((sb.rows, sb.cols), (2, 60));
        }
    }

    #[test]
    fn eight_directions_on_thin_residual_stay_balanced() {
        let x = random(2, 60, 3);
        let b = dfb_decompose(&x, 8, true, DfbFilter::Pkva).unwrap();
        assert_eq!(b.coefficient_count(), 120);
        for sb in &b.subbands {
            assert_eq!(sb.len(), 15);
        }
    }

    #[test]
    fn impulse_round_trip() {
        for &n in &[2, 4, 8] {
            let mut x = Array2::<f64>::zeros((16, 16));
            x[[7, 9]] = 1.0;
            let b = dfb_decompose(&x, n, false, DfbFilter::Pkva).unwrap();
            let y = dfb_reconstruct(&b).unwrap();
            assert!(rel_err(&y, &x) < 1e-6);
        }
    }

    #[test]
    fn round_trip_both_filters_odd_dims() {
        for filter in [DfbFilter::Pkva, DfbFilter::Cdf97] {
            for &(r, c) in &[(7, 13), (8, 240), (1, 5), (3, 3)] {
                for &n in &[2, 4, 8] {
                    let x = random(r, c, (r * c + n) as u64);
                    let b = dfb_decompose(&x, n, c % 2 == 0, filter).unwrap();
                    assert_eq!(b.coefficient_count(), r * c);
                    let y = dfb_reconstruct(&b).unwrap();
                    assert!(rel_err(&y, &x) < 1e-10, "{filter:?} {r}x{c} n={n}");
                }
            }
        }
    }

    #[test]
    fn zero_subbands_reconstruct_zero() {
        let x = random(8, 16, 9);
        let mut b = dfb_decompose(&x, 4, false, DfbFilter::Pkva).unwrap();
        for sb in b.subbands.iter_mut() {
            *sb = sb.zeroed();
        }
        assert!(dfb_reconstruct(&b).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unsupported_direction_count() {
        let x = random(8, 8, 1);
        assert!(matches!(
            dfb_decompose(&x, 3, false, DfbFilter::Pkva),
            Err(IrisError::UnsupportedDirectionCount(3))
        ));
        assert!(matches!(
            dfb_decompose(&x, 16, false, DfbFilter::Pkva),
            Err(IrisError::UnsupportedDirectionCount(16))
        ));
    }

    #[test]
    fn mismatched_subband_is_rejected() {
        let x = random(8, 8, 1);
        let mut b = dfb_decompose(&x, 2, false, DfbFilter::Pkva).unwrap();
        b.subbands[0].values.pop();
        assert!(matches!(
            dfb_reconstruct(&b),
            Err(IrisError::DimMismatch(_))
        ));
    }

    #[test]
    fn components_sum_to_input() {
        let x = random(8, 240, 4);
        let comps = dfb_components(&x, 8, true, DfbFilter::Pkva).unwrap();
        let mut sum = Array2::<f64>::zeros(x.dim());
        for c in &comps {
            sum += c;
        }
        assert!(rel_err(&sum, &x) < 1e-10);
    }

    fn fractions(n_dirs: usize, phi: f64, w: f64) -> Vec<f64> {
        let (wr, wc) = (w * phi.sin(), w * phi.cos());
        let x = Array2::from_shape_fn((64, 64), |(i, j)| (wr * i as f64 + wc * j as f64).cos());
        let b = dfb_decompose(&x, n_dirs, false, DfbFilter::Pkva).unwrap();
        let e: Vec<f64> = b
            .subbands
            .iter()
            .map(|s| s.values.iter().map(|v| v * v).sum())
            .collect();
        let t: f64 = e.iter().sum();
        e.into_iter().map(|v| v / t).collect()
    }

    #[test]
    fn oriented_waves_land_in_their_wedge() {
        // wedge edges sit at slopes 0, ±1/2, ±1, ±2 and vertical; test at
        // wedge centres, direction index ascending with frequency angle
        let deg = |d: f64| d.to_radians();
        let centres4 = [22.5, 67.5, 112.5, 157.5];
        let centres8 = [
            (0.25f64).atan().to_degrees(),
            (0.75f64).atan().to_degrees(),
            90.0 - (0.75f64).atan().to_degrees(),
            90.0 - (0.25f64).atan().to_degrees(),
        ];
        let centres8: Vec<f64> = centres8
            .iter()
            .copied()
            .chain(centres8.iter().map(|a| a + 90.0))
            .collect();
        // radial frequencies typical of a Laplacian bandpass image
        for w in [1.6, 2.2] {
            let f = fractions(2, deg(10.0), w);
            assert!(f[0] >= 0.7, "2 dirs, w={w}: {f:?}");
            let f = fractions(2, deg(80.0), w);
            assert!(f[1] >= 0.7, "2 dirs, w={w}: {f:?}");
            for (k, &a) in centres4.iter().enumerate() {
                let f = fractions(4, deg(a), w);
                assert!(f[k] >= 0.7, "4 dirs, {a} deg, w={w}: {f:?}");
            }
            for (k, &a) in centres8.iter().enumerate() {
                let f = fractions(8, deg(a), w);
                assert!(f[k] >= 0.7, "8 dirs, {a:.1} deg, w={w}: {f:?}");
            }
        }
    }
}
