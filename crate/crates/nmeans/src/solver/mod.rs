//! Optimal n-means solvers.
//!
//! In one dimension with squared-error distortion, optimal quantizer
//! cells are contiguous runs of support atoms, so the search space is
//! cut vectors rather than arbitrary assignments. Both solvers share a
//! dynamic program over contiguous cells that tracks *every* argmin
//! predecessor, which lets them enumerate all globally optimal
//! codebooks, not just one.

mod finite;
mod tail;

pub use finite::{count_optima, distortion_of, lloyd_descent, solve};
pub use tail::{
    solve_infinite, solve_infinite_capped, verify_naturals_structure,
    verify_reciprocal_structure, NaturalsCheck, ReciprocalCheck, ReciprocalForm,
    DEFAULT_HORIZON_CAP,
};

use std::fmt;

use crate::distribution::DistError;
use crate::interval::{PrefixSumCache, RangeEnd, StatsError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One optimal codebook (a deterministic choice among the optima).
    Single,
    /// Every optimal codebook.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// The finite solver was handed an infinite support.
    InfiniteSupport,
    /// The tail solver was handed a finite support.
    FiniteSupport,
    /// The adaptive horizon doubled past its cap without the optimal
    /// tail cut stabilizing.
    HorizonUnstable { cap: usize },
    /// A Lloyd iteration emptied a cell; the caller may perturb the
    /// initial codebook and retry.
    EmptyCellCollapse { iteration: usize },
    Stats(StatsError),
    Dist(DistError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::InfiniteSupport => {
                write!(f, "finite solver requires a finite support")
            }
            SolveError::FiniteSupport => {
                write!(f, "tail solver requires an infinite support")
            }
            SolveError::HorizonUnstable { cap } => {
                write!(f, "optimal tail cut did not stabilize below horizon cap {}", cap)
            }
            SolveError::EmptyCellCollapse { iteration } => {
                write!(f, "Lloyd iteration {} emptied a cell", iteration)
            }
            SolveError::Stats(e) => write!(f, "{}", e),
            SolveError::Dist(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<StatsError> for SolveError {
    fn from(e: StatsError) -> Self {
        SolveError::Stats(e)
    }
}

impl From<DistError> for SolveError {
    fn from(e: DistError) -> Self {
        SolveError::Dist(e)
    }
}

/// One optimal codebook with its induced contiguous partition.
///
/// `points` are the code points in ascending order. `cuts` are atom
/// indices `j_1 < ... < j_{n-1}` in *enumeration* order: cell `i` spans
/// atoms `(j_{i-1}, j_i]` and the last cell runs to the end of the
/// support (to infinity when `tail` is set). For descending-point
/// supports the first index cell therefore holds the largest points.
/// `ties` lists cuts whose boundary atom sits exactly midway between
/// two code points; such atoms are bookkept in the lower index cell and
/// the distortion is unaffected by the choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub points: Vec<Scalar>,
    pub cuts: Vec<usize>,
    pub ties: Vec<usize>,
    pub tail: bool,
}

/// Solver output: the minimal distortion and every codebook achieving
/// it (one, in `Mode::Single`).
#[derive(Debug, Clone)]
pub struct QuantizationResult {
    pub n: usize,
    pub distortion: Scalar,
    pub optima: Vec<Codebook>,
    pub exact: bool,
    pub precision_bits: Option<u32>,
}

impl QuantizationResult {
    /// Convenience accessor for the first (lexicographically smallest)
    /// optimal codebook.
    pub fn codebook(&self) -> &Codebook {
        &self.optima[0]
    }
}

/// Equality rule for grouping tied costs: exact in rational mode,
/// relative `2^-(precision/2)` in float mode.
#[derive(Clone, Copy)]
pub(crate) enum TieRule {
    Exact,
    Relative { precision: u32 },
}

impl TieRule {
    pub(crate) fn for_cache(cache: &PrefixSumCache) -> TieRule {
        if cache.is_exact() {
            TieRule::Exact
        } else {
            TieRule::Relative {
                precision: cache.precision(),
            }
        }
    }

    /// Costs tie when `|cost - best| <= 2^(-p/2) * max(|best|, 2^-p)`,
    /// evaluated on bit positions. A cheap magnitude pre-filter skips
    /// the subtraction for candidates nowhere near the incumbent (this
    /// check runs once per DP transition).
    pub(crate) fn ties(&self, cost: &Scalar, best: &Scalar) -> bool {
        match self {
            TieRule::Exact => cost == best,
            TieRule::Relative { precision } => {
                let p = *precision as i64;
                let cost_bit = cost.magnitude_bit();
                let best_bit = best.magnitude_bit();
                if let (Some(c), Some(b)) = (cost_bit, best_bit) {
                    if (c - b).abs() > 2 {
                        return false;
                    }
                }
                let scale_bit = best_bit.unwrap_or(-p).max(-p);
                match (cost - best).magnitude_bit() {
                    None => true,
                    Some(diff_bit) => diff_bit <= scale_bit - p / 2,
                }
            }
        }
    }
}

/// Cell costs `er(i, j)`, precomputed triangularly for modest horizons
/// and queried live above that.
pub(crate) struct ErGrid {
    table: Option<Vec<Scalar>>,
    jmax: usize,
}

const ER_TABLE_LIMIT: usize = 1024;

impl ErGrid {
    pub(crate) fn new(cache: &mut PrefixSumCache, jmax: usize) -> Result<ErGrid, StatsError> {
        if jmax > ER_TABLE_LIMIT {
            return Ok(ErGrid { table: None, jmax });
        }
        let mut table = Vec::with_capacity(jmax * (jmax + 1) / 2);
        for j in 1..=jmax {
            for i in 1..=j {
                table.push(cache.er(i, RangeEnd::At(j))?);
            }
        }
        Ok(ErGrid {
            table: Some(table),
            jmax,
        })
    }

    pub(crate) fn get(
        &self,
        cache: &mut PrefixSumCache,
        i: usize,
        j: usize,
    ) -> Result<Scalar, StatsError> {
        debug_assert!(1 <= i && i <= j && j <= self.jmax);
        match &self.table {
            Some(t) => Ok(t[j * (j - 1) / 2 + (i - 1)].clone()),
            None => cache.er(i, RangeEnd::At(j)),
        }
    }
}

/// Dynamic program over contiguous cells.
///
/// `cost[c][j]` is the minimal total cell distortion of splitting atoms
/// `1..=j` into `c` nonempty contiguous cells; `preds[c][j]` holds every
/// argmin position of the previous cut (under the tie rule).
pub(crate) struct CellDp {
    pub cost: Vec<Vec<Option<Scalar>>>,
    pub preds: Vec<Vec<Vec<u32>>>,
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn dp_cells(
    cache: &mut PrefixSumCache,
    er: &ErGrid,
    cells: usize,
    jmax: usize,
    mode: Mode,
    tie: TieRule,
) -> Result<CellDp, StatsError> {
    assert!(cells >= 1 && cells <= jmax);
    let mut cost: Vec<Vec<Option<Scalar>>> = vec![vec![None; jmax + 1]; cells + 1];
    let mut preds: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); jmax + 1]; cells + 1];
    for j in 1..=jmax {
        cost[1][j] = Some(er.get(cache, 1, j)?);
    }
    for c in 2..=cells {
        for j in c..=jmax {
            let mut best: Option<Scalar> = None;
            let mut args: Vec<(u32, Scalar)> = Vec::new();
            for pred in (c - 1)..=(j - 1) {
                let base = match &cost[c - 1][pred] {
                    Some(b) => b,
                    None => continue,
                };
                let cand = base + &er.get(cache, pred + 1, j)?;
                match &best {
                    None => {
                        best = Some(cand.clone());
                        args.push((pred as u32, cand));
                    }
                    Some(b) => {
                        if cand < *b {
                            best = Some(cand.clone());
                            match mode {
                                Mode::Single => args.clear(),
                                Mode::All => {
                                    let nb = best.as_ref().unwrap();
                                    args.retain(|(_, c0)| tie.ties(c0, nb));
                                }
                            }
                            args.push((pred as u32, cand));
                        } else if mode == Mode::All && tie.ties(&cand, b) {
                            args.push((pred as u32, cand));
                        }
                    }
                }
            }
            cost[c][j] = best;
            preds[c][j] = args.into_iter().map(|(p, _)| p).collect();
        }
    }
    Ok(CellDp { cost, preds })
}

/// Enumerate every optimal cut vector for splitting atoms `1..=j` into
/// `c` cells, from the recorded argmin predecessors.
pub(crate) fn backtrack_cuts(dp: &CellDp, c: usize, j: usize) -> Vec<Vec<usize>> {
    fn recurse(dp: &CellDp, c: usize, j: usize, suffix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if c == 1 {
            out.push(suffix.iter().rev().copied().collect());
            return;
        }
        for &p in &dp.preds[c][j] {
            suffix.push(p as usize);
            recurse(dp, c - 1, p as usize, suffix, out);
            suffix.pop();
        }
    }
    let mut out = Vec::new();
    let mut suffix = Vec::new();
    recurse(dp, c, j, &mut suffix, &mut out);
    out.sort();
    out.dedup();
    out
}

/// Assemble a codebook from a cut vector: code points are cell means;
/// the Voronoi condition is checked at every boundary and exact
/// midpoint ties are recorded.
pub(crate) fn build_codebook(
    cache: &mut PrefixSumCache,
    cuts: &[usize],
    last_end: RangeEnd,
) -> Result<Codebook, StatsError> {
    let mut starts = Vec::with_capacity(cuts.len() + 1);
    starts.push(1usize);
    for &c in cuts {
        starts.push(c + 1);
    }
    let cells = starts.len();
    let mut code = Vec::with_capacity(cells);
    for (t, &start) in starts.iter().enumerate() {
        let end = if t + 1 < cells {
            RangeEnd::At(cuts[t])
        } else {
            last_end
        };
        code.push(cache.av(start, end)?);
    }
    let mut ties = Vec::new();
    for (t, &cut) in cuts.iter().enumerate() {
        let (left_pt, _) = cache.dist().atom(cut).expect("cut within support");
        let (right_pt, _) = cache.dist().atom(cut + 1).expect("cut within support");
        let d_ll = (&left_pt - &code[t]).square();
        let d_lr = (&left_pt - &code[t + 1]).square();
        let d_rr = (&right_pt - &code[t + 1]).square();
        let d_rl = (&right_pt - &code[t]).square();
        assert!(
            d_ll <= d_lr && d_rr <= d_rl,
            "Voronoi condition violated at cut {}",
            cut
        );
        if d_ll == d_lr || d_rr == d_rl {
            ties.push(cut);
        }
    }
    let ascending = cache.dist().points_ascending();
    let mut points = code;
    if !ascending {
        points.reverse();
    }
    for w in points.windows(2) {
        assert!(w[0] < w[1], "code points must be strictly increasing");
    }
    Ok(Codebook {
        points,
        cuts: cuts.to_vec(),
        ties,
        tail: matches!(last_end, RangeEnd::Infinity),
    })
}
