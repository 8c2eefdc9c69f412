//! Channel matrices: fixtures, random generators and CSV persistence.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{c, hermitian_sqrt_psd, CMatrix};
use crate::regions::UserSet;

/// Number of midpoint nodes used for the one-ring angular integral.
pub const ONE_RING_NODES: usize = 2048;

/// Global channel `H = [H_1; ...; H_K]`, user `k` owning `rx[k]` consecutive rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    h: CMatrix,
    rx: Vec<usize>,
}

impl Channel {
    pub fn new(h: CMatrix, rx: Vec<usize>) -> Result<Self> {
        if rx.is_empty() || h.ncols() == 0 {
            return Err(Error::Contract("channel needs K >= 1 and M >= 1".into()));
        }
        if rx.len() > UserSet::MAX_USERS {
            return Err(Error::Capacity(format!(
                "{} users exceed the {}-user limit",
                rx.len(),
                UserSet::MAX_USERS
            )));
        }
        if rx.contains(&0) {
            return Err(Error::Contract("every user needs at least one receive antenna".into()));
        }
        let rows: usize = rx.iter().sum();
        if rows != h.nrows() {
            return Err(Error::Contract(format!(
                "receive antennas sum to {rows} but H has {} rows",
                h.nrows()
            )));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Contract("channel has non-finite entries".into()));
        }
        Ok(Self { h, rx })
    }

    /// One receive antenna per user.
    pub fn miso(h: CMatrix) -> Result<Self> {
        let k = h.nrows();
        Self::new(h, vec![1; k])
    }

    pub fn users(&self) -> usize {
        self.rx.len()
    }

    pub fn tx_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn rx_antennas(&self) -> &[usize] {
        &self.rx
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn is_miso(&self) -> bool {
        self.rx.iter().all(|&n| n == 1)
    }

    fn offset(&self, k: usize) -> usize {
        self.rx[..k].iter().sum()
    }

    /// Rows `H_k` of user `k` (0-based).
    pub fn user_block(&self, k: usize) -> CMatrix {
        self.h.rows(self.offset(k), self.rx[k]).into_owned()
    }

    /// Stacked rows of the users in `s`, in user order. Empty `s` gives a
    /// `0 x M` matrix.
    pub fn rows_of(&self, s: UserSet) -> CMatrix {
        let idx: Vec<usize> = s
            .users()
            .filter(|&k| k < self.users())
            .flat_map(|k| {
                let off = self.offset(k);
                off..off + self.rx[k]
            })
            .collect();
        self.h.select_rows(idx.iter())
    }

    /// Row indices of `H` belonging to the users in `s`.
    pub fn row_indices(&self, s: UserSet) -> Vec<usize> {
        s.users()
            .filter(|&k| k < self.users())
            .flat_map(|k| {
                let off = self.offset(k);
                off..off + self.rx[k]
            })
            .collect()
    }

    /// Sub-channel of the users in `s`, relabelled `0..|s|`.
    pub fn restrict(&self, s: UserSet) -> Result<Self> {
        let rx = s.users().filter(|&k| k < self.users()).map(|k| self.rx[k]).collect();
        Self::new(self.rows_of(s), rx)
    }

    /// Full user set `[K]`.
    pub fn all_users(&self) -> UserSet {
        UserSet::full(self.users())
    }

    /// SHA-256 over the shape and the IEEE bits of every entry.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.users() as u64).to_le_bytes());
        hasher.update((self.tx_antennas() as u64).to_le_bytes());
        for &n in &self.rx {
            hasher.update((n as u64).to_le_bytes());
        }
        for i in 0..self.h.nrows() {
            for j in 0..self.h.ncols() {
                let z = self.h[(i, j)];
                hasher.update(z.re.to_bits().to_le_bytes());
                hasher.update(z.im.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}", self.users(), self.tx_antennas());
        for n in &self.rx {
            write!(out, ",{n}").unwrap();
        }
        out.push('\n');
        for i in 0..self.h.nrows() {
            let row: Vec<String> = (0..self.h.ncols())
                .map(|j| {
                    let z = self.h[(i, j)];
                    format!("{:.16e}:{:.16e}", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
        let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let fields: Vec<usize> = header
            .split(',')
            .map(|f| f.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(hline, format!("bad header: {e}")))?;
        if fields.len() < 3 {
            return Err(parse_err(hline, "header must be K,M,nr_1..nr_K".into()));
        }
        let (k, m) = (fields[0], fields[1]);
        let rx = fields[2..].to_vec();
        if rx.len() != k {
            return Err(parse_err(hline, format!("header declares K={k} but lists {} antenna counts", rx.len())));
        }
        let rows: usize = rx.iter().sum();
        let mut entries = Vec::with_capacity(rows * m);
        let mut seen = 0;
        for (idx, line) in lines {
            if seen == rows {
                return Err(parse_err(idx, format!("expected {rows} data rows")));
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != m {
                return Err(parse_err(idx, format!("expected {m} entries, found {}", cells.len())));
            }
            for cell in cells {
                let (re, im) = cell
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| parse_err(idx, format!("entry `{cell}` is not re:im")))?;
                let re: f64 = re.parse().map_err(|e| parse_err(idx, format!("real part `{re}`: {e}")))?;
                let im: f64 = im.parse().map_err(|e| parse_err(idx, format!("imaginary part `{im}`: {e}")))?;
                if !re.is_finite() || !im.is_finite() {
                    return Err(parse_err(idx, "non-finite entry".into()));
                }
                entries.push(c(re, im));
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("expected {rows} data rows, found {seen}"),
            });
        }
        let h = CMatrix::from_row_slice(rows, m, &entries);
        Self::new(h, rx).map_err(|e| Error::Parse { line: hline + 1, message: e.to_string() })
    }
}

pub fn save_channel(ch: &Channel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, ch.to_csv())?;
    Ok(())
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<Channel> {
    Channel::from_csv(&std::fs::read_to_string(path)?)
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// i.i.d. CN(0,1) MISO channel.
pub fn rayleigh(k: usize, m: usize, seed: u64) -> Result<Channel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<Complex64> = (0..k * m).map(|_| gaussian(&mut rng)).collect();
    Channel::miso(CMatrix::from_row_slice(k, m, &entries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneRingParams {
    /// Angular spread `Delta` in radians.
    pub delta: f64,
    /// Group centre angles in radians.
    pub centers: Vec<f64>,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl OneRingParams {
    /// `Delta = 40 pi / 180`, centres `-pi/3 + Delta + (g-1) pi/3`, half-wavelength ULA.
    pub fn standard(groups: usize) -> Self {
        let delta = 40.0 * PI / 180.0;
        let centers = (0..groups).map(|g| -PI / 3.0 + delta + PI / 3.0 * g as f64).collect();
        Self { delta, centers, spacing: 0.5 }
    }

    pub fn groups(&self) -> usize {
        self.centers.len()
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Precondition(format!("angular spread must be positive, got {}", self.delta)));
        }
        if self.centers.is_empty() {
            return Err(Error::Precondition("at least one group is required".into()));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Precondition(format!("antenna spacing must be positive, got {}", self.spacing)));
        }
        Ok(())
    }
}

/// `R(m,n) = (1/2Delta) int exp(-i 2 pi d (m-n) sin(theta + a)) da` on `[-Delta, Delta]`,
/// midpoint rule with [`ONE_RING_NODES`] nodes.
pub fn one_ring_correlation(m: usize, theta: f64, delta: f64, spacing: f64) -> CMatrix {
    let step = 2.0 * delta / ONE_RING_NODES as f64;
    let sines: Vec<f64> = (0..ONE_RING_NODES)
        .map(|j| (theta - delta + (j as f64 + 0.5) * step).sin())
        .collect();
    // Toeplitz: one value per lag.
    let lag = |d: usize| -> Complex64 {
        if d == 0 {
            return c(1.0, 0.0);
        }
        let sum: Complex64 = sines
            .iter()
            .map(|s| Complex64::from_polar(1.0, -2.0 * PI * spacing * d as f64 * s))
            .sum();
        sum / ONE_RING_NODES as f64
    };
    let lags: Vec<Complex64> = (0..m).map(lag).collect();
    CMatrix::from_fn(m, m, |i, j| if i >= j { lags[i - j] } else { lags[j - i].conj() })
}

/// One-ring channel: user `k` is in group `groups[k]` and has row
/// `(R_g^{1/2} w)^T` with `w ~ CN(0, I)`.
pub fn one_ring(k: usize, m: usize, params: &OneRingParams, groups: &[usize], seed: u64) -> Result<Channel> {
    params.validate()?;
    if k == 0 || m == 0 {
        return Err(Error::Contract("channel needs K >= 1 and M >= 1".into()));
    }
    if groups.len() != k {
        return Err(Error::Contract(format!("{} group labels for {k} users", groups.len())));
    }
    if let Some(&g) = groups.iter().find(|&&g| g >= params.groups()) {
        return Err(Error::Contract(format!("group {g} out of range 0..{}", params.groups())));
    }
    let roots = params
        .centers
        .iter()
        .map(|&theta| {
            let r = one_ring_correlation(m, theta, params.delta, params.spacing);
            hermitian_sqrt_psd(&r, 1e-8)
                .map_err(|e| Error::Numerical(format!("one-ring correlation not PSD: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMatrix::zeros(k, m);
    for (user, &g) in groups.iter().enumerate() {
        let w = CMatrix::from_fn(m, 1, |_, _| gaussian(&mut rng));
        let row = &roots[g] * w;
        for j in 0..m {
            h[(user, j)] = row[(j, 0)];
        }
    }
    Channel::miso(h)
}

/// Balanced random assignment of `k` users to `groups` groups.
pub fn random_groups(k: usize, groups: usize, seed: u64) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..k).map(|u| u % groups.max(1)).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    labels
}

/// Matrix of [`pathological_three_user`] without the range checks, so
/// `alpha = 0` (a generic full-rank channel) is available for comparisons.
pub fn pathological_matrix(p: f64, alpha: f64) -> CMatrix {
    let a = p.powf(alpha / 2.0);
    crate::numerics::real_matrix(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, a, a, 1.0])
}

/// `H_1 = [1 0 0]`, `H_2 = [0 1 0]`, `H_3 = [P^{a/2} P^{a/2} 1]`.
pub fn pathological_three_user(p: f64, alpha: f64) -> Result<Channel> {
    if !(p > 0.0) {
        return Err(Error::Precondition(format!("P must be positive, got {p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Channel::miso(pathological_matrix(p, alpha))
}

/// `H = [[1, 0], [f, g]]`.
pub fn triangular_two_user(f: Complex64, g: Complex64) -> Result<Channel> {
    let mut h = CMatrix::zeros(2, 2);
    h[(0, 0)] = c(1.0, 0.0);
    h[(1, 0)] = f;
    h[(1, 1)] = g;
    Channel::miso(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigen_range, is_hermitian};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rayleigh_is_deterministic() {
        let a = rayleigh(2, 2, 7).unwrap();
        let b = rayleigh(2, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, rayleigh(2, 2, 8).unwrap());
        let ch = rayleigh(4, 6, 1).unwrap();
        assert_eq!((ch.users(), ch.tx_antennas()), (4, 6));
    }

    #[test]
    fn rayleigh_entries_have_unit_variance() {
        let draws: Vec<Complex64> =
            (0..1000).flat_map(|seed| rayleigh(10, 10, seed).unwrap().matrix().iter().copied().collect::<Vec<_>>()).collect();
        let n = draws.len() as f64;
        let mean: Complex64 = draws.iter().sum::<Complex64>() / n;
        let var = draws.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
        let re_var = draws.iter().map(|z| z.re * z.re).sum::<f64>() / n;
        assert!((re_var - 0.5).abs() < 0.02);
    }

    #[test]
    fn one_ring_correlation_is_valid() {
        let params = OneRingParams::standard(2);
        for &theta in &params.centers {
            let r = one_ring_correlation(8, theta, params.delta, params.spacing);
            assert!(is_hermitian(&r));
            for i in 0..8 {
                assert_eq!(r[(i, i)], c(1.0, 0.0));
            }
            assert!(eigen_range(&r).0 > -1e-8);
        }
    }

    #[test]
    fn isotropic_limit_decays_like_bessel() {
        // Delta = pi at half-wavelength spacing: R(m,n) = J0(pi (m-n)), small off-diagonal.
        let r = one_ring_correlation(4, 0.3, PI, 0.5);
        // J0(pi) = -0.30424217764409, J0(2 pi) = 0.22013789340...
        assert_abs_diff_eq!(r[(1, 0)].re, -0.304_242_177_644_093_9, epsilon = 1e-6);
        assert_abs_diff_eq!(r[(2, 0)].re, 0.220_276_908_539_2, epsilon = 1e-3);
        assert!(r[(1, 0)].im.abs() < 1e-6);
    }

    #[test]
    fn one_ring_groups_correlate() {
        let params = OneRingParams::standard(2);
        let trials = 10_000;
        let (mut same, mut apart) = (0.0, 0.0);
        for seed in 0..trials {
            let ch = one_ring(3, 8, &params, &[0, 0, 1], seed).unwrap();
            let h = ch.matrix();
            let inner = |a: usize, b: usize| {
                let num: Complex64 = (0..8).map(|j| h[(a, j)] * h[(b, j)].conj()).sum();
                let na: f64 = (0..8).map(|j| h[(a, j)].norm_sqr()).sum();
                let nb: f64 = (0..8).map(|j| h[(b, j)].norm_sqr()).sum();
                num.norm() / (na * nb).sqrt()
            };
            same += inner(0, 1);
            apart += inner(0, 2);
        }
        let (same, apart) = (same / trials as f64, apart / trials as f64);
        assert!(same > 1.5 * apart, "same {same} apart {apart}");
    }

    #[test]
    fn one_ring_rejects_bad_input() {
        let mut params = OneRingParams::standard(2);
        assert!(one_ring(2, 2, &params, &[0, 2], 0).is_err());
        assert!(one_ring(2, 2, &params, &[0], 0).is_err());
        params.delta = 0.0;
        assert!(matches!(one_ring(2, 2, &params, &[0, 1], 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn random_groups_are_balanced() {
        let g = random_groups(5, 2, 9);
        assert_eq!(g.iter().filter(|&&x| x == 0).count(), 3);
        assert_eq!(g, random_groups(5, 2, 9));
    }

    #[test]
    fn pathological_rows() {
        let ch = pathological_three_user(1e4, 0.5).unwrap();
        let h = ch.matrix();
        assert_eq!(h[(2, 0)], c(10.0, 0.0));
        assert_eq!(h[(2, 1)], c(10.0, 0.0));
        let ch = pathological_three_user(100.0, 0.5).unwrap();
        assert_abs_diff_eq!(ch.matrix()[(2, 1)].re, 100f64.powf(0.25), epsilon = 1e-15);
        assert_eq!(h[(2, 2)], c(1.0, 0.0));
        assert_eq!(h[(0, 0)], c(1.0, 0.0));
        let limit = pathological_matrix(100.0, 0.0);
        assert_eq!(limit.row(2).iter().copied().collect::<Vec<_>>(), vec![c(1.0, 0.0); 3]);
        assert!(pathological_three_user(100.0, 1.0).is_err());
        assert!(pathological_three_user(100.0, 0.0).is_err());
        assert!(pathological_three_user(0.0, 0.5).is_err());
    }

    #[test]
    fn triangular_fixtures() {
        let id = triangular_two_user(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(*id.matrix(), crate::numerics::identity(2));
        let rank1 = triangular_two_user(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(rank1.matrix().rank(1e-12), 1);
    }

    #[test]
    fn blocks_and_restriction() {
        let h = CMatrix::from_fn(4, 2, |i, j| c(i as f64, j as f64));
        let ch = Channel::new(h, vec![1, 2, 1]).unwrap();
        assert_eq!(ch.user_block(1).nrows(), 2);
        assert_eq!(ch.user_block(1)[(0, 0)], c(1.0, 0.0));
        let s = UserSet::from_users(&[0, 2]);
        assert_eq!(ch.row_indices(s), vec![0, 3]);
        let sub = ch.restrict(s).unwrap();
        assert_eq!(sub.rx_antennas(), &[1, 1]);
        assert_eq!(sub.matrix()[(1, 0)], c(3.0, 0.0));
        assert_eq!(ch.rows_of(UserSet::EMPTY).nrows(), 0);
        assert!(Channel::new(CMatrix::zeros(3, 2), vec![1, 1]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let id = Channel::miso(crate::numerics::identity(2)).unwrap();
        assert_eq!(Channel::from_csv(&id.to_csv()).unwrap(), id);
        let ch = rayleigh(4, 6, 1).unwrap();
        let back = Channel::from_csv(&ch.to_csv()).unwrap();
        let diff = (back.matrix() - ch.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-12);
        assert_eq!(back.digest(), ch.digest());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        save_channel(&ch, &path).unwrap();
        assert_eq!(load_channel(&path).unwrap(), ch);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = Channel::from_csv("1,2,1\n1.0,0.0:0.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Channel::from_csv("2,1,1,1\n1:0\n1:0,2:0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Channel::from_csv("1,1,1\nNaN:0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = Channel::from_csv("2,1,1\n1:0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
