//! Symmetric sparse matrices, a nested-dissection Cholesky factorization and
//! a diagonally preconditioned conjugate-gradient fallback.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

const NONE: u32 = u32::MAX;

/// Compressed sparse rows, both triangles stored, columns sorted per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last = NONE;
            for (c, v) in row {
                if c == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = c;
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { n, indptr, indices, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().zip(&self.values[r]).map(|(c, v)| (*c as usize, *v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k] as usize];
            }
            y[i] = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Principal submatrix on `keep` (indices renumbered in the order given).
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![NONE; self.n];
        for (new, old) in keep.iter().enumerate() {
            map[*old] = new as u32;
        }
        let rows = keep
            .iter()
            .map(|&i| {
                self.row(i)
                    .filter_map(|(j, v)| (map[j] != NONE).then_some((map[j], v)))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }
}

/// Geometric nested dissection on lattice coordinates: lattice lines (or
/// planes) of constant coordinate separate stencils of reach one.
pub fn nested_dissection(coords: &[[i32; 3]]) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..coords.len() as u32).collect();
    let mut out = Vec::with_capacity(coords.len());
    dissect(&mut ids, coords, &mut out);
    out
}

fn dissect(ids: &mut [u32], coords: &[[i32; 3]], out: &mut Vec<u32>) {
    const LEAF: usize = 64;
    if ids.len() <= LEAF {
        out.extend_from_slice(ids);
        return;
    }
    let mut lo = [i32::MAX; 3];
    let mut hi = [i32::MIN; 3];
    for &i in ids.iter() {
        for k in 0..3 {
            lo[k] = lo[k].min(coords[i as usize][k]);
            hi[k] = hi[k].max(coords[i as usize][k]);
        }
    }
    let axis = (0..3).max_by_key(|&k| hi[k] - lo[k]).unwrap();
    if hi[axis] - lo[axis] < 2 {
        out.extend_from_slice(ids);
        return;
    }
    let mut vals: Vec<i32> = ids.iter().map(|&i| coords[i as usize][axis]).collect();
    let mid = vals.len() / 2;
    let (_, m, _) = vals.select_nth_unstable(mid);
    let m = (*m).clamp(lo[axis] + 1, hi[axis] - 1);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &i in ids.iter() {
        let c = coords[i as usize][axis];
        if c < m {
            left.push(i);
        } else if c > m {
            right.push(i);
        } else {
            sep.push(i);
        }
    }
    dissect(&mut left, coords, out);
    dissect(&mut right, coords, out);
    out.extend_from_slice(&sep);
}

/// Sparse Cholesky factor `P A Pᵀ = L Lᵀ` (up-looking, column storage with
/// the diagonal first in each column).
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<u32>,
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
}

impl CholeskyFactor {
    pub fn factor(a: &CsrMatrix, perm: Vec<u32>) -> Result<Self> {
        let n = a.n();
        let mut iperm = vec![0u32; n];
        for (new, old) in perm.iter().enumerate() {
            iperm[*old as usize] = new as u32;
        }
        // Upper triangle of C = P A Pᵀ by columns.
        let mut cp = Vec::with_capacity(n + 1);
        let mut ci: Vec<u32> = Vec::with_capacity(a.nnz() / 2 + n);
        let mut cx: Vec<f64> = Vec::with_capacity(a.nnz() / 2 + n);
        cp.push(0);
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        for k in 0..n {
            scratch.clear();
            for (j, v) in a.row(perm[k] as usize) {
                let i = iperm[j];
                if i as usize <= k {
                    scratch.push((i, v));
                }
            }
            scratch.sort_by_key(|e| e.0);
            for (i, v) in &scratch {
                ci.push(*i);
                cx.push(*v);
            }
            cp.push(ci.len());
        }

        let parent = etree(n, &cp, &ci);

        // Symbolic pass: column counts from the row patterns.
        let mut flag = vec![NONE; n];
        let mut stack = vec![0u32; n];
        let mut path = vec![0u32; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut flag, &mut stack, &mut path);
            for &i in &stack[top..n] {
                counts[i as usize] += 1;
            }
        }
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0usize);
        for c in &counts {
            lp.push(lp.last().unwrap() + c);
        }
        let nnz = lp[n];
        let mut li = vec![0u32; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut next: Vec<usize> = lp[..n].to_vec();
        let mut x = vec![0.0f64; n];
        flag.iter_mut().for_each(|f| *f = NONE);

        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut flag, &mut stack, &mut path);
            for p in cp[k]..cp[k + 1] {
                x[ci[p] as usize] = cx[p];
            }
            let mut d = x[k];
            let diag_ref = d.abs();
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let i = i as usize;
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for p in lp[i] + 1..next[i] {
                    x[li[p] as usize] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k as u32;
                lx[p] = lki;
            }
            if !(d > 1e-14 * diag_ref) {
                return Err(Error::NotPositiveDefinite { step: k, pivot: d });
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k as u32;
            lx[p] = math::sqrt(d);
        }
        Ok(CholeskyFactor { n, perm, lp, li, lx })
    }

    pub fn nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o as usize]).collect();
        for j in 0..n {
            let yj = y[j] / self.lx[self.lp[j]];
            y[j] = yj;
            for p in self.lp[j] + 1..self.lp[j + 1] {
                y[self.li[p] as usize] -= self.lx[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let mut s = y[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p] * y[self.li[p] as usize];
            }
            y[j] = s / self.lx[self.lp[j]];
        }
        let mut x = vec![0.0; n];
        for (k, &o) in self.perm.iter().enumerate() {
            x[o as usize] = y[k];
        }
        x
    }
}

fn etree(n: usize, cp: &[usize], ci: &[u32]) -> Vec<u32> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for p in cp[k]..cp[k + 1] {
            let mut i = ci[p];
            while i != NONE && (i as usize) < k {
                let inext = ancestor[i as usize];
                ancestor[i as usize] = k as u32;
                if inext == NONE {
                    parent[i as usize] = k as u32;
                }
                i = inext;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of L, returned in `stack[top..n]`.
fn ereach(
    k: usize,
    cp: &[usize],
    ci: &[u32],
    parent: &[u32],
    flag: &mut [u32],
    stack: &mut [u32],
    path: &mut [u32],
) -> usize {
    let n = parent.len();
    let mut top = n;
    flag[k] = k as u32;
    for p in cp[k]..cp[k + 1] {
        let mut i = ci[p];
        if i as usize >= k {
            continue;
        }
        let mut len = 0;
        while flag[i as usize] != k as u32 {
            path[len] = i;
            len += 1;
            flag[i as usize] = k as u32;
            i = parent[i as usize];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = path[len];
        }
    }
    top
}

/// Diagonally preconditioned conjugate gradients. Returns the iterate and
/// the achieved relative residual.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let n = a.n();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let dinv: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { step: it, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok((x, rel));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / bnorm;
    Err(Error::SolverFailure { residual: rel, iterations: max_iter })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}
