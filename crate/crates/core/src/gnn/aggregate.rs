//! Neighbour and node-set reductions with their backward passes.

use crate::graph::Adjacency;
use crate::nn::{Matrix, Real};

/// Marks an empty reduction in argmax buffers.
pub const NO_SOURCE: u32 = u32::MAX;

fn powi<T: Real>(x: T, p: usize) -> T {
    match p {
        1 => x,
        2 => x * x,
        _ => x.powi(p as i32),
    }
}

/// out_i = mean over in-neighbours j of x_j^p (zero without neighbours).
pub fn mean_pow<T: Real>(x: &Matrix<T>, adj: &Adjacency, p: usize) -> Matrix<T> {
    let w = x.cols();
    let mut out = Matrix::zeros(x.rows(), w);
    for i in 0..adj.node_count() {
        let nb = adj.in_neighbors(i);
        if nb.is_empty() {
            continue;
        }
        let row = out.row_mut(i);
        for &j in nb {
            for (o, &v) in row.iter_mut().zip(x.row(j as usize)) {
                *o = *o + powi(v, p);
            }
        }
        let inv = T::from_f64_lossy(1.0 / nb.len() as f64);
        row.iter_mut().for_each(|o| *o = *o * inv);
    }
    out
}

/// Writes node `i`'s mean of x_j^p into `out` (zeros without neighbours).
pub fn mean_pow_row<T: Real>(x: &Matrix<T>, adj: &Adjacency, p: usize, i: usize, out: &mut [T]) {
    out.iter_mut().for_each(|o| *o = T::zero());
    let nb = adj.in_neighbors(i);
    if nb.is_empty() {
        return;
    }
    for &j in nb {
        for (o, &v) in out.iter_mut().zip(x.row(j as usize)) {
            *o = *o + powi(v, p);
        }
    }
    let inv = T::from_f64_lossy(1.0 / nb.len() as f64);
    out.iter_mut().for_each(|o| *o = *o * inv);
}

/// Writes node `i`'s per-channel neighbour max into `out`.
pub fn max_row<T: Real>(x: &Matrix<T>, adj: &Adjacency, i: usize, out: &mut [T]) {
    let Some((&first, rest)) = adj.in_neighbors(i).split_first() else {
        out.iter_mut().for_each(|o| *o = T::zero());
        return;
    };
    out.copy_from_slice(x.row(first as usize));
    for &j in rest {
        for (o, &v) in out.iter_mut().zip(x.row(j as usize)) {
            if v > *o {
                *o = v;
            }
        }
    }
}

/// Adds ∂out/∂x contracted with `dout` into `dx`.
pub fn mean_pow_backward<T: Real>(x: &Matrix<T>, adj: &Adjacency, p: usize, dout: &Matrix<T>, dx: &mut Matrix<T>) {
    let pt = T::from_f64_lossy(p as f64);
    for i in 0..adj.node_count() {
        let nb = adj.in_neighbors(i);
        if nb.is_empty() {
            continue;
        }
        let inv = T::from_f64_lossy(1.0 / nb.len() as f64);
        let d = dout.row(i);
        for &j in nb {
            let j = j as usize;
            if p == 1 {
                for (g, &dv) in dx.row_mut(j).iter_mut().zip(d) {
                    *g = *g + dv * inv;
                }
            } else {
                // read x_j before borrowing dx mutably
                for (c, &dv) in d.iter().enumerate() {
                    let v = x.get(j, c);
                    let g = dx.get(j, c) + dv * inv * pt * powi(v, p - 1);
                    dx.set(j, c, g);
                }
            }
        }
    }
}

/// Per-channel max over in-neighbours plus the winning source of each
/// entry. Nodes without neighbours get zeros and [`NO_SOURCE`].
pub fn max_neighbors<T: Real>(x: &Matrix<T>, adj: &Adjacency) -> (Matrix<T>, Vec<u32>) {
    let w = x.cols();
    let n = adj.node_count();
    let mut out = Matrix::zeros(n, w);
    let mut arg = vec![NO_SOURCE; n * w];
    for i in 0..n {
        let nb = adj.in_neighbors(i);
        let Some((&first, rest)) = nb.split_first() else {
            continue;
        };
        let row = out.row_mut(i);
        row.copy_from_slice(x.row(first as usize));
        let a = &mut arg[i * w..(i + 1) * w];
        a.iter_mut().for_each(|v| *v = first);
        for &j in rest {
            for ((o, ai), &v) in row.iter_mut().zip(a.iter_mut()).zip(x.row(j as usize)) {
                if v > *o {
                    *o = v;
                    *ai = j;
                }
            }
        }
    }
    (out, arg)
}

/// Routes `dout` to the winning sources recorded by a max reduction.
pub fn max_backward<T: Real>(arg: &[u32], dout: &Matrix<T>, dx: &mut Matrix<T>) {
    let w = dout.cols();
    for i in 0..dout.rows() {
        for c in 0..w {
            let j = arg[i * w + c];
            if j != NO_SOURCE {
                let g = dx.get(j as usize, c) + dout.get(i, c);
                dx.set(j as usize, c, g);
            }
        }
    }
}

/// Mean of the rows of each graph, `ptr` holding graph boundaries.
pub fn pool_mean<T: Real>(x: &Matrix<T>, ptr: &[usize]) -> Matrix<T> {
    let w = x.cols();
    let mut out = Matrix::zeros(ptr.len() - 1, w);
    for g in 0..ptr.len() - 1 {
        let row = out.row_mut(g);
        for i in ptr[g]..ptr[g + 1] {
            for (o, &v) in row.iter_mut().zip(x.row(i)) {
                *o = *o + v;
            }
        }
        let n = ptr[g + 1] - ptr[g];
        if n > 0 {
            let inv = T::from_f64_lossy(1.0 / n as f64);
            row.iter_mut().for_each(|o| *o = *o * inv);
        }
    }
    out
}

pub fn pool_mean_backward<T: Real>(dout: &Matrix<T>, ptr: &[usize], dx: &mut Matrix<T>) {
    for g in 0..ptr.len() - 1 {
        let n = ptr[g + 1] - ptr[g];
        if n == 0 {
            continue;
        }
        let inv = T::from_f64_lossy(1.0 / n as f64);
        let d = dout.row(g);
        for i in ptr[g]..ptr[g + 1] {
            for (o, &v) in dx.row_mut(i).iter_mut().zip(d) {
                *o = *o + v * inv;
            }
        }
    }
}

/// Per-channel max over the rows of each graph, with argmax rows.
pub fn pool_max<T: Real>(x: &Matrix<T>, ptr: &[usize]) -> (Matrix<T>, Vec<u32>) {
    let w = x.cols();
    let b = ptr.len() - 1;
    let mut out = Matrix::zeros(b, w);
    let mut arg = vec![NO_SOURCE; b * w];
    for g in 0..b {
        if ptr[g] == ptr[g + 1] {
            continue;
        }
        let row = out.row_mut(g);
        row.copy_from_slice(x.row(ptr[g]));
        let a = &mut arg[g * w..(g + 1) * w];
        a.iter_mut().for_each(|v| *v = ptr[g] as u32);
        for i in ptr[g] + 1..ptr[g + 1] {
            for ((o, ai), &v) in row.iter_mut().zip(a.iter_mut()).zip(x.row(i)) {
                if v > *o {
                    *o = v;
                    *ai = i as u32;
                }
            }
        }
    }
    (out, arg)
}
