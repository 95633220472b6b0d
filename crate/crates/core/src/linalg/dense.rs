use super::{dot, CholFactor, DenseSym, JitterPolicy, Storage};
use crate::error::{Error, Result};

// Row-oriented Cholesky–Banachiewicz on a copy of the lower triangle.
// Returns false on a non-positive pivot.
fn factor_in_place(l: &mut [f64], n: usize, shift: f64) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let (head, tail) = l.split_at_mut(i * n);
            let row_i = &tail[..n];
            let s = if j < i {
                dot(&row_i[..j], &head[j * n..j * n + j])
            } else {
                dot(&row_i[..j], &row_i[..j])
            };
            if j < i {
                let v = (row_i[j] - s) / head[j * n + j];
                tail[j] = v;
            } else {
                let d = row_i[i] + shift - s;
                if !(d > 0.0) || !d.is_finite() {
                    return false;
                }
                tail[i] = d.sqrt();
            }
        }
        for v in &mut l[i * n + i + 1..(i + 1) * n] {
            *v = 0.0;
        }
    }
    true
}

/// Dense Cholesky `M + jI = L Lᵀ`, escalating the jitter `j` per `policy`
/// when a pivot fails.
pub fn cholesky(m: &DenseSym, policy: JitterPolicy) -> Result<CholFactor> {
    let n = m.n();
    let scale = m.max_diag().max(f64::MIN_POSITIVE);
    let mut attempts = vec![0.0];
    attempts.extend(policy.levels().into_iter().map(|d| d * scale));
    let mut last = 0.0;
    for shift in attempts {
        let mut l = m.as_slice().to_vec();
        if factor_in_place(&mut l, n, shift) {
            if shift > 0.0 {
                log::debug!("dense Cholesky needed jitter {shift:e} (n = {n})");
            }
            return Ok(CholFactor {
                n,
                storage: Storage::Dense(l),
                perm: None,
                jitter_applied: shift,
            });
        }
        last = shift;
    }
    Err(Error::NotPositiveDefinite { jitter: last })
}
