use super::{PolyError, Polynomial};

/// Entries below this fraction of the magnitudes that produced them are
/// cancellation residue and count as exact zeros.
const ZERO_RELATIVE: f64 = 1e-10;

/// Replacement for a vanishing pivot, relative to the largest table entry.
const EPSILON_RELATIVE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    Hurwitz,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    /// Sign changes in the first Routh column. Zero unless `kind` is `Unstable`.
    pub right_half_plane_count: usize,
    /// Set when an epsilon pivot or an auxiliary-polynomial row was needed.
    pub degenerate: bool,
}

impl StabilityVerdict {
    pub fn is_hurwitz(&self) -> bool {
        self.kind == StabilityKind::Hurwitz
    }
}

/// Classifies `p` with the Routh tabular array.
///
/// The polynomial is first scaled so its leading coefficient is positive.
/// Degenerate tables are completed with the textbook rules: a vanishing pivot
/// in an otherwise nonzero row is replaced by a small positive epsilon, and a
/// row that vanishes entirely is replaced by the derivative of the auxiliary
/// polynomial formed from the row above. Either event marks the verdict as
/// degenerate, and a degenerate table without sign changes is `Marginal`.
pub fn routh_hurwitz(p: &Polynomial) -> Result<StabilityVerdict, PolyError> {
    p.check_for_stability()?;
    let p = p.with_positive_leading();
    let n = p.degree();
    let width = n / 2 + 1;
    let coeff_scale = p.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));

    // Descending order: a_n, a_{n-1}, ..., a_0.
    let desc: Vec<f64> = p.coeffs().iter().rev().copied().collect();
    let mut row0 = vec![0.0; width];
    let mut row1 = vec![0.0; width];
    for (k, &c) in desc.iter().enumerate() {
        let c = if c.abs() <= ZERO_RELATIVE * coeff_scale { 0.0 } else { c };
        if k % 2 == 0 {
            row0[k / 2] = c;
        } else {
            row1[k / 2] = c;
        }
    }

    let mut table_max = coeff_scale;
    let mut degenerate = false;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    rows.push(row0);
    // Row for power n-1 gets the same degenerate treatment as computed rows.
    fix_row(&mut row1, &rows[0], n, &mut table_max, &mut degenerate);
    rows.push(row1);

    for i in 2..=n {
        let upper = &rows[i - 2];
        let prev = &rows[i - 1];
        let pivot = prev[0];
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            let a = pivot * upper[j + 1];
            let b = upper[0] * prev[j + 1];
            let v = (a - b) / pivot;
            let magnitude = (a.abs() + b.abs()) / pivot.abs();
            next[j] = if v.abs() <= ZERO_RELATIVE * magnitude { 0.0 } else { v };
        }
        let power_above = n - (i - 1);
        fix_row(&mut next, prev, power_above, &mut table_max, &mut degenerate);
        rows.push(next);
    }

    let sign_changes = rows
        .windows(2)
        .filter(|w| (w[0][0] > 0.0) != (w[1][0] > 0.0))
        .count();

    let kind = if sign_changes > 0 {
        StabilityKind::Unstable
    } else if degenerate {
        StabilityKind::Marginal
    } else {
        StabilityKind::Hurwitz
    };
    Ok(StabilityVerdict {
        kind,
        right_half_plane_count: if kind == StabilityKind::Unstable { sign_changes } else { 0 },
        degenerate,
    })
}

/// Applies the zero-row and zero-pivot rules to a freshly computed row.
/// `above` is the previous row, whose entries carry powers
/// `power_above, power_above - 2, ...`.
fn fix_row(row: &mut [f64], above: &[f64], power_above: usize, table_max: &mut f64, degenerate: &mut bool) {
    if row.iter().all(|&v| v == 0.0) {
        // Derivative of the auxiliary polynomial built from the row above.
        for (j, slot) in row.iter_mut().enumerate() {
            let power = power_above as i64 - 2 * j as i64;
            *slot = if power > 0 { above[j] * power as f64 } else { 0.0 };
        }
        *degenerate = true;
    }
    if row[0] == 0.0 {
        row[0] = EPSILON_RELATIVE * *table_max;
        *degenerate = true;
    }
    for &v in row.iter() {
        *table_max = table_max.max(v.abs());
    }
}
