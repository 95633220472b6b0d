//! Up-looking sparse Cholesky: elimination tree, row patterns by `ereach`,
//! then one row of `L` per step.

use super::{CholFactor, FillOrdering, JitterPolicy, SparseSymMatrix, Storage};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

// Upper triangle of P A Pᵀ in compressed columns (rows ascending).
struct Upper {
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

fn permuted_upper(m: &SparseSymMatrix, perm: &[usize]) -> Upper {
    let n = m.n();
    let mut pinv = vec![0; n];
    for (k, &v) in perm.iter().enumerate() {
        pinv[v] = k;
    }
    let (cp, ri, vx) = (m.colptr(), m.rowind(), m.values());
    let mut counts = vec![0usize; n + 1];
    for j in 0..n {
        for &i in &ri[cp[j]..cp[j + 1]] {
            counts[pinv[i].max(pinv[j]) + 1] += 1;
        }
    }
    for k in 0..n {
        counts[k + 1] += counts[k];
    }
    let colptr = counts.clone();
    let mut next = counts;
    let nnz = ri.len();
    let mut rowind = vec![0; nnz];
    let mut values = vec![0.0; nnz];
    for j in 0..n {
        for p in cp[j]..cp[j + 1] {
            let (a, b) = (pinv[ri[p]], pinv[j]);
            let (r, c) = (a.min(b), a.max(b));
            rowind[next[c]] = r;
            values[next[c]] = vx[p];
            next[c] += 1;
        }
    }
    for c in 0..n {
        let range = colptr[c]..colptr[c + 1];
        let mut col: Vec<(usize, f64)> = rowind[range.clone()]
            .iter()
            .copied()
            .zip(values[range.clone()].iter().copied())
            .collect();
        col.sort_unstable_by_key(|e| e.0);
        for (k, (r, v)) in col.into_iter().enumerate() {
            rowind[range.start + k] = r;
            values[range.start + k] = v;
        }
    }
    Upper {
        colptr,
        rowind,
        values,
    }
}

fn etree(c: &Upper, n: usize) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &i0 in &c.rowind[c.colptr[k]..c.colptr[k + 1]] {
            let mut i = i0;
            while i != NONE && i < k {
                let inext = ancestor[i];
                ancestor[i] = k;
                if inext == NONE {
                    parent[i] = k;
                }
                i = inext;
            }
        }
    }
    parent
}

// Nonzero pattern of row k of L (excluding k), topologically ordered, in
// stack[top..n]. `mark` must be false on entry and is restored on exit.
fn ereach(c: &Upper, k: usize, parent: &[usize], stack: &mut [usize], mark: &mut [bool]) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = true;
    for &i0 in &c.rowind[c.colptr[k]..c.colptr[k + 1]] {
        if i0 > k {
            continue;
        }
        let mut i = i0;
        let mut len = 0;
        while !mark[i] {
            stack[len] = i;
            len += 1;
            mark[i] = true;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    for &v in &stack[top..n] {
        mark[v] = false;
    }
    mark[k] = false;
    top
}

struct Symbolic {
    parent: Vec<usize>,
    colptr: Vec<usize>,
}

fn symbolic(c: &Upper, n: usize) -> Symbolic {
    let parent = etree(c, n);
    let mut counts = vec![1usize; n];
    let mut stack = vec![0; n];
    let mut mark = vec![false; n];
    for k in 0..n {
        let top = ereach(c, k, &parent, &mut stack, &mut mark);
        for &j in &stack[top..n] {
            counts[j] += 1;
        }
    }
    let mut colptr = vec![0; n + 1];
    for j in 0..n {
        colptr[j + 1] = colptr[j] + counts[j];
    }
    Symbolic { parent, colptr }
}

fn numeric(c: &Upper, sym: &Symbolic, n: usize, shift: f64) -> Option<(Vec<usize>, Vec<f64>)> {
    let lnz = sym.colptr[n];
    let mut rowind = vec![0; lnz];
    let mut values = vec![0.0; lnz];
    let mut next = sym.colptr[..n].to_vec();
    let mut x = vec![0.0; n];
    let mut stack = vec![0; n];
    let mut mark = vec![false; n];
    for k in 0..n {
        let top = ereach(c, k, &sym.parent, &mut stack, &mut mark);
        for p in c.colptr[k]..c.colptr[k + 1] {
            let i = c.rowind[p];
            if i <= k {
                x[i] = c.values[p];
            }
        }
        let mut d = x[k] + shift;
        x[k] = 0.0;
        for &j in &stack[top..n] {
            let lkj = x[j] / values[sym.colptr[j]];
            x[j] = 0.0;
            for p in sym.colptr[j] + 1..next[j] {
                x[rowind[p]] -= values[p] * lkj;
            }
            d -= lkj * lkj;
            let p = next[j];
            next[j] += 1;
            rowind[p] = k;
            values[p] = lkj;
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let p = next[k];
        next[k] += 1;
        rowind[p] = k;
        values[p] = d.sqrt();
    }
    Some((rowind, values))
}

/// Sparse Cholesky with the automatic fill-reducing ordering.
pub fn sparse_cholesky(m: &SparseSymMatrix, policy: JitterPolicy) -> Result<CholFactor> {
    sparse_cholesky_with(m, FillOrdering::Auto, policy)
}

pub fn sparse_cholesky_with(
    m: &SparseSymMatrix,
    ordering: FillOrdering,
    policy: JitterPolicy,
) -> Result<CholFactor> {
    let n = m.n();
    let perm = ordering.compute(m);
    let c = permuted_upper(m, &perm);
    let sym = symbolic(&c, n);
    let scale = m.max_diag().max(f64::MIN_POSITIVE);
    let mut attempts = vec![0.0];
    attempts.extend(policy.levels().into_iter().map(|d| d * scale));
    let mut last = 0.0;
    for shift in attempts {
        if let Some((rowind, values)) = numeric(&c, &sym, n, shift) {
            if shift > 0.0 {
                log::debug!("sparse Cholesky needed jitter {shift:e} (n = {n})");
            }
            return Ok(CholFactor {
                n,
                storage: Storage::Sparse {
                    colptr: sym.colptr,
                    rowind,
                    values,
                },
                perm: Some(perm),
                jitter_applied: shift,
            });
        }
        last = shift;
    }
    Err(Error::NotPositiveDefinite { jitter: last })
}
