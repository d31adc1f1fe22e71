//! Brute-force dense oracles shared by the integration tests.
#![allow(dead_code)]

use kronsketch::kron::{FourierFactor, HadamardFactor, OrthFactor, PermuteMode};
use kronsketch::sketch::{Components, Mixer, Sketcher};

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, a: vec![0.0; rows * cols] }
    }
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.cols + c] = v;
    }
    pub fn mul(&self, o: &Dense) -> Dense {
        assert_eq!(self.cols, o.rows);
        let mut m = Dense::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self.at(i, k);
                if v == 0.0 {
                    continue;
                }
                for j in 0..o.cols {
                    m.a[i * o.cols + j] += v * o.at(k, j);
                }
            }
        }
        m
    }
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }
    pub fn t(&self) -> Dense {
        let mut m = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.at(i, j));
            }
        }
        m
    }
    pub fn kron(&self, o: &Dense) -> Dense {
        let mut m = Dense::zeros(self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for k in 0..o.rows {
                    for l in 0..o.cols {
                        m.set(i * o.rows + k, j * o.cols + l, self.at(i, j) * o.at(k, l));
                    }
                }
            }
        }
        m
    }
    pub fn diag(d: &[f64]) -> Dense {
        let mut m = Dense::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }
    /// `self · diag(d)`
    pub fn col_scale(mut self, d: &[f64]) -> Dense {
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.a[i * self.cols + j] *= d[j];
            }
        }
        self
    }
    /// `diag(d) · self`
    pub fn row_scale(mut self, d: &[f64]) -> Dense {
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.a[i * self.cols + j] *= d[i];
            }
        }
        self
    }
    pub fn scaled(mut self, s: f64) -> Dense {
        self.a.iter_mut().for_each(|v| *v *= s);
        self
    }
    pub fn first_rows(&self, r: usize) -> Dense {
        Dense { rows: r, cols: self.cols, a: self.a[..r * self.cols].to_vec() }
    }
    pub fn first_cols(&self, c: usize) -> Dense {
        let mut m = Dense::zeros(self.rows, c);
        for i in 0..self.rows {
            for j in 0..c {
                m.set(i, j, self.at(i, j));
            }
        }
        m
    }
}

/// `(1/√n)(-1)^popcount(i & j)`.
pub fn hadamard(n: usize) -> Dense {
    let s = 1.0 / (n as f64).sqrt();
    let mut m = Dense::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, if (i & j).count_ones() % 2 == 0 { s } else { -s });
        }
    }
    m
}

/// Real orthogonal packing of the DFT, from the naive O(n²) sum.
pub fn fourier(n: usize) -> Dense {
    let h = n / 2;
    let mut m = Dense::zeros(n, n);
    let s = 1.0 / (n as f64).sqrt();
    let s2 = (2.0 / n as f64).sqrt();
    for j in 0..n {
        let ang = |k: usize| -2.0 * std::f64::consts::PI * ((k * j) % n) as f64 / n as f64;
        m.set(0, j, s);
        m.set(h, j, s * ang(h).cos());
        for k in 1..h {
            m.set(k, j, s2 * ang(k).cos());
            m.set(h + k, j, s2 * ang(k).sin());
        }
    }
    m
}

pub fn permuted(base: Dense, perm: &[usize], mode: PermuteMode) -> Dense {
    let n = base.rows;
    let mut m = Dense::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let v = match mode {
                PermuteMode::None => base.at(r, c),
                PermuteMode::Rows => base.at(perm[r], c),
                PermuteMode::Cols => base.at(r, perm[c]),
            };
            m.set(r, c, v);
        }
    }
    m
}

pub fn hadamard_factor(f: &HadamardFactor) -> Dense {
    permuted(hadamard(f.mixer().size()), f.permutation(), f.mode())
}

pub fn fourier_factor(f: &FourierFactor<f64>) -> Dense {
    permuted(fourier(f.mixer().size()), f.permutation(), f.mode())
}

pub fn orth_factor(f: &OrthFactor<f64>) -> Dense {
    let (rows, cols) = f.shape();
    Dense { rows, cols, a: f.entries().to_vec() }
}

pub fn kron_all(fs: &[Dense]) -> Dense {
    fs.iter().fold(Dense::identity(1), |acc, f| acc.kron(f))
}

pub fn mixer(m: &Mixer<f64>) -> Dense {
    match m {
        Mixer::Hadamard(f) => kron_all(&f.iter().map(hadamard_factor).collect::<Vec<_>>()),
        Mixer::Fourier(f) => kron_all(&f.iter().map(fourier_factor).collect::<Vec<_>>()),
        Mixer::Orthogonal(f) => kron_all(&f.iter().map(orth_factor).collect::<Vec<_>>()),
    }
}

/// Dense `D × N` matrix of a sketcher, assembled from its sampled components.
pub fn sketch_matrix(s: &Sketcher<f64>) -> Dense {
    let n = s.input_dim();
    let np = s.padded_dim();
    let d = s.output_dim();
    let sigma = (np as f64 / d as f64).sqrt();
    let signs = |m: Dense, b: &Option<Vec<f64>>| match b {
        Some(b) => m.col_scale(b),
        None => m,
    };
    let full = match s.components() {
        Components::Dense { matrix } => Dense { rows: d, cols: n, a: matrix.clone() },
        Components::Fjl { signs: b, mixer: p, sparse } => {
            let mut g = Dense::zeros(d, np);
            for i in 0..d {
                for k in sparse.row_ptr[i]..sparse.row_ptr[i + 1] {
                    g.set(i, sparse.col_idx[k], sparse.values[k]);
                }
            }
            signs(g.mul(&mixer(p)), b).scaled(sigma)
        }
        Components::Affd { signs: b, m1, gauss, m2 } => {
            let head = mixer(m2).first_rows(d).col_scale(gauss);
            signs(head.mul(&mixer(m1)), b).scaled(sigma)
        }
        Components::Afjl { signs: b, m1, gauss } => {
            let head = mixer(m1).first_rows(d).row_scale(&gauss[..d]);
            signs(head, b).scaled(sigma)
        }
        Components::Ffd { mixer: h, blocks } => {
            let h = mixer(h);
            let mut feat = Dense::zeros(np, d);
            for (b, blk) in blocks.iter().enumerate() {
                let mut pi = Dense::zeros(d, d);
                for (i, &p) in blk.perm.iter().enumerate() {
                    pi.set(i, p, 1.0);
                }
                let mb = h
                    .mul(&Dense::diag(&blk.gauss))
                    .mul(&pi)
                    .mul(&h)
                    .mul(&Dense::diag(&blk.signs));
                for r in 0..d {
                    for c in 0..d {
                        feat.set(b * d + r, c, mb.at(r, c));
                    }
                }
            }
            feat.t()
        }
        Components::Qk { factors, shape } => {
            let restricted: Vec<Dense> = factors
                .iter()
                .zip(shape.rows())
                .map(|(f, r)| orth_factor(f).first_rows(r))
                .collect();
            kron_all(&restricted).scaled(sigma)
        }
    };
    if full.cols == n {
        full
    } else {
        full.first_cols(n)
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
