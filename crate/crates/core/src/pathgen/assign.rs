//! Frame-to-frame point matching.
//!
//! Unequal frames are first padded to a square problem: each surplus point
//! on the larger side gets a dark (alpha = 0) partner duplicated at its
//! nearest counterpart on the smaller side, and the cost of that pairing is
//! the squared distance to that counterpart. Both methods solve the same
//! padded matrix, so the exact solution never costs more than the greedy one.

use crate::geom::{Coordinate, Point, PointSet};

use super::PathError;

/// Square cost matrices up to this size are solved exactly by default.
pub const DEFAULT_EXACT_CUTOFF: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AssignMethod {
    /// Hungarian algorithm (falls back to greedy above the exact cutoff).
    #[default]
    Exact,
    /// Repeatedly take the globally nearest unmatched pair.
    Greedy,
}

impl std::str::FromStr for AssignMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(AssignMethod::Exact),
            "greedy" => Ok(AssignMethod::Greedy),
            other => Err(format!("unknown assignment method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignConfig {
    pub method: AssignMethod,
    pub exact_cutoff: usize,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self {
            method: AssignMethod::Exact,
            exact_cutoff: DEFAULT_EXACT_CUTOFF,
        }
    }
}

impl From<AssignMethod> for AssignConfig {
    fn from(method: AssignMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// A bijection between the padded source and target point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `permutation[i]` is the target index matched to source `i`.
    pub permutation: Vec<usize>,
    /// Sum of squared distances over matched pairs, in source order.
    pub total_cost: f64,
    /// Source points after padding.
    pub sources: Vec<Point>,
    /// Target points after padding.
    pub targets: Vec<Point>,
}

fn nearest(points: &[Point], to: &Coordinate) -> (usize, f64) {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.coord.distance_squared(to)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Builds the padded square cost matrix. Rows are sources, columns targets.
fn padded_costs(a: &[Point], b: &[Point]) -> Vec<Vec<f64>> {
    let n = a.len().max(b.len());
    let mut cost = vec![vec![0.0; n]; n];
    for (i, row) in cost.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = match (a.get(i), b.get(j)) {
                (Some(p), Some(q)) => p.coord.distance_squared(&q.coord),
                (None, Some(q)) => nearest(a, &q.coord).1,
                (Some(p), None) => nearest(b, &p.coord).1,
                (None, None) => unreachable!("only one side is padded"),
            };
        }
    }
    cost
}

/// Minimum-cost perfect matching on a square matrix (shortest augmenting
/// paths with row/column potentials, O(n^3)). Returns `row -> column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based internally; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[row_of[j] - 1] = j - 1;
    }
    perm
}

/// Greedy matching: all pairs sorted by `(cost, row, column)`, taken while
/// both ends are free.
pub fn greedy(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            pairs.push((c, i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut perm = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    let mut left = n;
    for (_, i, j) in pairs {
        if left == 0 {
            break;
        }
        if perm[i] == usize::MAX && !col_used[j] {
            perm[i] = j;
            col_used[j] = true;
            left -= 1;
        }
    }
    perm
}

/// Sum of `cost[i][perm[i]]` in row order.
pub fn permutation_cost(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

pub fn assign(a: &PointSet, b: &PointSet, method: AssignMethod) -> Result<Assignment, PathError> {
    assign_with(a, b, &method.into())
}

pub fn assign_with(a: &PointSet, b: &PointSet, config: &AssignConfig) -> Result<Assignment, PathError> {
    assign_points(&a.points, &b.points, config)
}

pub(crate) fn assign_points(a: &[Point], b: &[Point], config: &AssignConfig) -> Result<Assignment, PathError> {
    if a.is_empty() || b.is_empty() {
        return Err(PathError::EmptyFrame);
    }
    let cost = padded_costs(a, b);
    let n = cost.len();
    let permutation = match config.method {
        AssignMethod::Exact if n <= config.exact_cutoff => hungarian(&cost),
        _ => greedy(&cost),
    };
    let total_cost = permutation_cost(&cost, &permutation);

    let mut sources = a.to_vec();
    let mut targets = b.to_vec();
    if a.len() < n {
        // dummy source rows: each surplus target pulls a dark twin of its
        // nearest source
        for &col in &permutation[a.len()..] {
            let (i, _) = nearest(a, &b[col].coord);
            sources.push(Point::new(a[i].coord, a[i].color.dark()));
        }
    }
    if b.len() < n {
        let mut padded = vec![None; n - b.len()];
        for (i, &j) in permutation.iter().enumerate() {
            if j >= b.len() {
                let (k, _) = nearest(b, &a[i].coord);
                padded[j - b.len()] = Some(Point::new(b[k].coord, b[k].color.dark()));
            }
        }
        targets.extend(padded.into_iter().map(|p| p.expect("every dummy column is matched")));
    }
    Ok(Assignment {
        permutation,
        total_cost,
        sources,
        targets,
    })
}
