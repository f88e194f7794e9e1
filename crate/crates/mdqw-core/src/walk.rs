//! Two-component wavefunction on a bounded 1-D integer lattice and the
//! coin/shift operators that define one step of the Hadamard walk.
//!
//! The walker state is a spinor `(psi_L(x), psi_R(x))` over sites
//! `x in [-X, +X]`. One time step applies the Hadamard coin
//! `(psi_L, psi_R) <- ((psi_L + psi_R)/sqrt(2), (psi_L - psi_R)/sqrt(2))`
//! at every site, then the chirality-conditioned shift
//! `psi_L(x) <- psi_L(x+1)`, `psi_R(x) <- psi_R(x-1)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Spinor amplitudes over the lattice `[-half_width, +half_width]` plus the
/// elapsed step count.
///
/// Storage is two flat arrays of length `2 * half_width + 1` with index
/// offset `half_width`. A support window is tracked internally so stepping
/// costs are proportional to the light cone rather than the full lattice;
/// observable behavior is identical to operating on the full arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    left: Vec<C64>,
    right: Vec<C64>,
    time: u64,
    half_width: i64,
    /// Inclusive window of sites that may hold nonzero amplitude.
    lo: i64,
    hi: i64,
}

impl SpinorField {
    /// Walker localized at the origin with chirality amplitudes `(a0, b0)`.
    ///
    /// Fails with [`Error::Normalization`] unless `|a0|^2 + |b0|^2 = 1`
    /// within `1e-12`, and with [`Error::Capacity`] if `half_width < 1`.
    pub fn initial_state(a0: C64, b0: C64, half_width: i64) -> Result<Self> {
        let norm = a0.norm_sqr() + b0.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Normalization { norm });
        }
        if half_width < 1 {
            return Err(Error::Capacity(format!(
                "half_width {half_width} must be at least 1"
            )));
        }
        let n = (2 * half_width + 1) as usize;
        let mut left = vec![C64::ZERO; n];
        let mut right = vec![C64::ZERO; n];
        left[half_width as usize] = a0;
        right[half_width as usize] = b0;
        Ok(Self {
            left,
            right,
            time: 0,
            half_width,
            lo: 0,
            hi: 0,
        })
    }

    /// The symmetric seed `(1/sqrt(2), i/sqrt(2))` whose free evolution keeps
    /// the occupation distribution mirror-symmetric about the origin.
    pub fn symmetric_seed(half_width: i64) -> Result<Self> {
        Self::initial_state(
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, FRAC_1_SQRT_2),
            half_width,
        )
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    #[inline]
    fn index(&self, x: i64) -> usize {
        (x + self.half_width) as usize
    }

    /// Both chirality amplitudes at site `x`.
    pub fn amplitudes(&self, x: i64) -> Result<(C64, C64)> {
        self.check_site(x)?;
        let i = self.index(x);
        Ok((self.left[i], self.right[i]))
    }

    fn check_site(&self, x: i64) -> Result<()> {
        if x.abs() > self.half_width {
            return Err(Error::Index {
                x,
                half_width: self.half_width,
            });
        }
        Ok(())
    }

    /// Occupation probability `f(x, t) = |psi_L|^2 + |psi_R|^2`.
    pub fn occupation(&self, x: i64) -> Result<f64> {
        self.check_site(x)?;
        let i = self.index(x);
        Ok(self.left[i].norm_sqr() + self.right[i].norm_sqr())
    }

    /// Total probability on the lattice; equals 1 minus the absorbed mass
    /// once a detector has acted.
    pub fn total_probability(&self) -> f64 {
        let (il, ih) = (self.index(self.lo), self.index(self.hi));
        self.left[il..=ih]
            .iter()
            .zip(&self.right[il..=ih])
            .map(|(l, r)| l.norm_sqr() + r.norm_sqr())
            .sum()
    }

    /// Apply the Hadamard coin at every site. Time is unchanged.
    pub fn coin_step(&mut self) {
        let (il, ih) = (self.index(self.lo), self.index(self.hi));
        for (l, r) in self.left[il..=ih].iter_mut().zip(&mut self.right[il..=ih]) {
            let (a, b) = (*l, *r);
            *l = (a + b) * FRAC_1_SQRT_2;
            *r = (a - b) * FRAC_1_SQRT_2;
        }
    }

    /// Translate the left component by -1 and the right component by +1 and
    /// advance time by one step.
    ///
    /// Fails with [`Error::Capacity`] if either boundary site holds nonzero
    /// amplitude, which would shift probability off the lattice.
    pub fn shift_step(&mut self) -> Result<()> {
        let x = self.half_width;
        if self.occupation(-x).unwrap() != 0.0 || self.occupation(x).unwrap() != 0.0 {
            return Err(Error::Capacity(format!(
                "amplitude at the lattice edge +-{x} would shift out of storage"
            )));
        }
        let (il, ih) = (self.index(self.lo), self.index(self.hi));
        // The edge checks above guarantee zero amplitude at indices 0 and
        // len-1, so the copies may shrink their spans to stay in bounds.
        let s = il.max(1);
        if s <= ih {
            self.left.copy_within(s..=ih, s - 1);
        }
        self.left[ih] = C64::ZERO;
        let e = ih.min(self.left.len() - 2);
        if il <= e {
            self.right.copy_within(il..=e, il + 1);
        }
        self.right[il] = C64::ZERO;
        self.lo = (self.lo - 1).max(-self.half_width);
        self.hi = (self.hi + 1).min(self.half_width);
        self.time += 1;
        Ok(())
    }

    /// One full walk step: coin then shift.
    pub fn evolve_step(&mut self) -> Result<()> {
        self.coin_step();
        self.shift_step()
    }

    /// Remove all amplitude at site `x`, returning the probability removed.
    /// This is the projective part of an absorbing measurement; the state is
    /// deliberately not renormalized.
    pub(crate) fn project_out(&mut self, x: i64) -> Result<f64> {
        let p = self.occupation(x)?;
        let i = self.index(x);
        self.left[i] = C64::ZERO;
        self.right[i] = C64::ZERO;
        Ok(p)
    }
}
