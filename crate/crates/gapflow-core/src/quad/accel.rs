//! Wynn epsilon-algorithm extrapolation of a slowly convergent sequence.
//!
//! Used on the partial sums of between-zero-cell contributions to oscillatory
//! integrals: the cells alternate in sign, so the partial sums converge
//! linearly and the epsilon table turns tens of cells into near machine
//! accuracy. The organisation (condensed two-diagonal storage, last-three
//! results error estimate) follows the QUADPACK `qelg` routine.

const TABLE_LEN: usize = 52;

pub(crate) struct EpsilonTable {
    n: usize,
    rlist2: [f64; TABLE_LEN],
    nres: usize,
    res3la: [f64; 3],
}

impl EpsilonTable {
    pub(crate) fn new() -> Self {
        EpsilonTable {
            n: 0,
            rlist2: [0.0; TABLE_LEN],
            nres: 0,
            res3la: [0.0; 3],
        }
    }

    /// Number of partial sums currently held.
    pub(crate) fn len(&self) -> usize {
        self.n
    }

    /// Append the next partial sum of the series.
    pub(crate) fn append(&mut self, y: f64) {
        if self.n >= TABLE_LEN - 3 {
            // drop the oldest column pair to keep the diagonal sliding
            self.rlist2.copy_within(2..self.n, 0);
            self.n -= 2;
        }
        self.rlist2[self.n] = y;
        self.n += 1;
    }

    /// Extrapolate the sequence limit; returns `(estimate, abserr)`.
    pub(crate) fn extrapolate(&mut self) -> (f64, f64) {
        let n = self.n - 1;
        let current = self.rlist2[n];

        if n < 2 {
            return (current, f64::MAX);
        }

        let newelm = n / 2;
        let norig = n;
        let mut nfinal = n;
        let mut result = current;
        let mut abserr = f64::MAX;

        self.rlist2[n + 2] = self.rlist2[n];
        self.rlist2[n] = f64::MAX;

        for i in 0..newelm {
            let mut res = self.rlist2[n - 2 * i + 2];
            let e0 = self.rlist2[n - 2 * i - 2];
            let e1 = self.rlist2[n - 2 * i - 1];
            let e2 = res;

            let e1abs = e1.abs();
            let delta2 = e2 - e1;
            let err2 = delta2.abs();
            let tol2 = e2.abs().max(e1abs) * f64::EPSILON;
            let delta3 = e1 - e0;
            let err3 = delta3.abs();
            let tol3 = e1abs.max(e0.abs()) * f64::EPSILON;

            if err2 <= tol2 && err3 <= tol3 {
                // three successive elements agree to machine accuracy
                return (res, (err2 + err3).max(5.0 * f64::EPSILON * res.abs()));
            }

            let e3 = self.rlist2[n - 2 * i];
            self.rlist2[n - 2 * i] = e1;
            let delta1 = e1 - e3;
            let err1 = delta1.abs();
            let tol1 = e1abs.max(e3.abs()) * f64::EPSILON;

            if err1 <= tol1 || err2 <= tol2 || err3 <= tol3 {
                nfinal = 2 * i;
                break;
            }

            let ss = delta1.recip() + delta2.recip() - delta3.recip();
            if (ss * e1).abs() <= 1e-4 {
                nfinal = 2 * i;
                break;
            }

            res = e1 + ss.recip();
            self.rlist2[n - 2 * i] = res;
            let error = err2 + (res - e2).abs() + err3;
            if error <= abserr {
                abserr = error;
                result = res;
            }
        }

        let limexp = TABLE_LEN - 3;
        if nfinal == limexp {
            nfinal = 2 * (limexp / 2);
        }

        if norig % 2 == 1 {
            for i in 0..=newelm {
                self.rlist2[1 + i * 2] = self.rlist2[i * 2 + 3];
            }
        } else {
            for i in 0..=newelm {
                self.rlist2[i * 2] = self.rlist2[i * 2 + 2];
            }
        }
        if norig != nfinal {
            for i in 0..=nfinal {
                self.rlist2[i] = self.rlist2[norig - nfinal + i];
            }
        }
        self.n = nfinal + 1;

        if self.nres < 3 {
            self.res3la[self.nres] = result;
            abserr = f64::MAX;
        } else {
            abserr = (result - self.res3la[2]).abs()
                + (result - self.res3la[1]).abs()
                + (result - self.res3la[0]).abs();
            self.res3la[0] = self.res3la[1];
            self.res3la[1] = self.res3la[2];
            self.res3la[2] = result;
        }
        self.nres += 1;

        (result, abserr.max(5.0 * f64::EPSILON * result.abs()))
    }
}
