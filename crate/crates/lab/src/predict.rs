use parconc_core::exponents::{predict, Predictions};
use parconc_core::Exponent;

use crate::LabError;

/// Predictions for every combination of the inputs.
pub fn table(qs: &[Exponent], gammas: &[f64], dims: &[usize]) -> Result<Vec<Predictions>, LabError> {
    let mut rows = Vec::new();
    for &q in qs {
        for &g in gammas {
            for &n in dims {
                rows.push(predict(q, g, n)?);
            }
        }
    }
    Ok(rows)
}

pub fn render(rows: &[Predictions]) -> String {
    let mut s = format!(
        "{:>8} {:>6} {:>3} {:>10} {:>10} {:>10} {:>10}\n",
        "q", "gamma", "n", "p", "r", "sharp", "p/(np+1)"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>8} {:>6} {:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6}\n",
            r.q.to_string(),
            r.gamma,
            r.n,
            r.solution_p,
            r.energy_r,
            r.sharpness,
            r.energy_from_solution
        ));
    }
    s
}
