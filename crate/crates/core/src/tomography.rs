//! Simulated single-qubit state tomography and the two-probe gate-fidelity and
//! reciprocity characterization of gadgets.
//!
//! Probe states are `|H>` and `|+>`. Two probes do not make informationally complete
//! process tomography; the figures of merit are averages of state fidelities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gadget::{synthesize, GadgetAngles};
use crate::optics::{Direction, ElementSequence};
use crate::su2::{state_fidelity, DensityMatrix, Ket2, Matrix2};

/// Number of measurements per basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shots {
    Finite(u64),
    Infinite,
}

/// Outcomes of X, Y and Z measurements on copies of one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub shots: Shots,
    /// Number of `+1` outcomes per basis (X, Y, Z); zero for infinite shots.
    pub plus_counts: [u64; 3],
    /// Empirical (or exact) expectation values per basis.
    pub expectations: [f64; 3],
}

pub fn simulate_measurements<R: Rng + ?Sized>(
    state: &DensityMatrix,
    shots: Shots,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let (x, y, z) = crate::su2::bloch_expectations(state);
    let exact = [x, y, z];
    match shots {
        Shots::Infinite => Ok(MeasurementRecord {
            shots,
            plus_counts: [0; 3],
            expectations: exact,
        }),
        Shots::Finite(0) => Err(Error::InvalidInput("shots must be positive".into())),
        Shots::Finite(n) => {
            let mut plus_counts = [0u64; 3];
            let mut expectations = [0.0; 3];
            for k in 0..3 {
                let p = (0.5 * (1.0 + exact[k])).clamp(0.0, 1.0);
                let dist = Binomial::new(n, p).map_err(|e| Error::InvalidInput(e.to_string()))?;
                let up = dist.sample(rng);
                plus_counts[k] = up;
                expectations[k] = (2.0 * up as f64 - n as f64) / n as f64;
            }
            Ok(MeasurementRecord {
                shots,
                plus_counts,
                expectations,
            })
        }
    }
}

/// Linear inversion `(1 + x X + y Y + z Z)/2`, clipped to a physical state.
pub fn reconstruct_state(record: &MeasurementRecord) -> Result<DensityMatrix> {
    let [x, y, z] = record.expectations;
    DensityMatrix::from_bloch(x, y, z)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TomographyResult {
    pub state: DensityMatrix,
    pub record: MeasurementRecord,
    pub fidelity: f64,
}

/// Measures `state` and compares the reconstruction with `target`.
pub fn tomograph<R: Rng + ?Sized>(
    state: &DensityMatrix,
    target: &DensityMatrix,
    shots: Shots,
    rng: &mut R,
) -> Result<TomographyResult> {
    let record = simulate_measurements(state, shots, rng)?;
    let rho = reconstruct_state(&record)?;
    Ok(TomographyResult {
        state: rho,
        record,
        fidelity: state_fidelity(&rho, target),
    })
}

/// Imperfections of the characterization setup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyNoise {
    /// Standard deviation of each waveplate orientation error, radians. Drawn
    /// independently for every realization of a gadget.
    pub waveplate_angle_jitter_sigma: f64,
    /// Shots per measurement basis; `0` stands for infinite statistics.
    pub shots: u64,
}

impl TomographyNoise {
    pub fn noiseless() -> Self {
        Self {
            waveplate_angle_jitter_sigma: 0.0,
            shots: 0,
        }
    }

    /// Placeholder calibration: 0.05° jitter and 10⁴ shots per basis.
    pub fn default_noise() -> Self {
        Self {
            waveplate_angle_jitter_sigma: 0.05f64.to_radians(),
            shots: 10_000,
        }
    }

    pub fn shots(&self) -> Shots {
        if self.shots == 0 {
            Shots::Infinite
        } else {
            Shots::Finite(self.shots)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.waveplate_angle_jitter_sigma;
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "waveplate_angle_jitter_sigma must be finite and nonnegative, got {s}"
            )));
        }
        Ok(())
    }
}

pub const PROBES: [fn() -> Ket2; 2] = [Ket2::h, Ket2::plus];

fn realize<R: Rng + ?Sized>(
    angles: &GadgetAngles,
    noise: &TomographyNoise,
    rng: &mut R,
) -> Result<ElementSequence> {
    noise.validate()?;
    let sigma = noise.waveplate_angle_jitter_sigma;
    let train = angles.reduced_sequence();
    if sigma == 0.0 {
        return Ok(train);
    }
    Ok(train.perturb_waveplates(|| sigma * rng.sample::<f64, _>(StandardNormal)))
}

/// Mean over `{|H>, |+>}` of the fidelity between the tomographed gadget output and the
/// ideal `U|Ψ>`, for one noisy realization of the gadget.
pub fn gate_fidelity<R: Rng + ?Sized>(
    angles: &GadgetAngles,
    direction: Direction,
    target: &Matrix2,
    noise: &TomographyNoise,
    rng: &mut R,
) -> Result<f64> {
    target.ensure_unitary()?;
    let m = realize(angles, noise, rng)?.matrix(direction)?;
    let mut total = 0.0;
    for probe in PROBES {
        let psi = probe();
        let actual = m.apply(&psi).density();
        let ideal = target.apply(&psi).density();
        total += tomograph(&actual, &ideal, noise.shots(), rng)?.fidelity;
    }
    Ok(total / PROBES.len() as f64)
}

/// Mean over `{|H>, |+>}` of the fidelity between the tomographed forward and backward
/// outputs. The two directions use independent jitter realizations.
pub fn reciprocity<R: Rng + ?Sized>(
    angles: &GadgetAngles,
    noise: &TomographyNoise,
    rng: &mut R,
) -> Result<f64> {
    let fw = realize(angles, noise, rng)?.matrix(Direction::Forward)?;
    let bw = realize(angles, noise, rng)?.matrix(Direction::Backward)?;
    let mut total = 0.0;
    for probe in PROBES {
        let psi = probe();
        let shots = noise.shots();
        let rho_fw = reconstruct_state(&simulate_measurements(&fw.apply(&psi).density(), shots, rng)?)?;
        let rho_bw = reconstruct_state(&simulate_measurements(&bw.apply(&psi).density(), shots, rng)?)?;
        total += state_fidelity(&rho_fw, &rho_bw);
    }
    Ok(total / PROBES.len() as f64)
}

/// Haar-random SU(2) element: a uniformly random unit quaternion from four Gaussians.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Matrix2 {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-6 {
            continue;
        }
        let [a, b, c, d] = q.map(|x| x / n);
        return Matrix2::new(
            Complex64::new(a, b),
            Complex64::new(c, d),
            Complex64::new(-c, d),
            Complex64::new(a, -b),
        );
    }
}

/// The four gadget/direction series of a characterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Series {
    #[serde(rename = "U_fw")]
    UFw,
    #[serde(rename = "U_bw")]
    UBw,
    #[serde(rename = "V_fw")]
    VFw,
    #[serde(rename = "V_bw")]
    VBw,
}

impl Series {
    pub const ALL: [Series; 4] = [Series::UFw, Series::UBw, Series::VFw, Series::VBw];

    pub fn label(&self) -> &'static str {
        match self {
            Series::UFw => "U_fw",
            Series::UBw => "U_bw",
            Series::VFw => "V_fw",
            Series::VBw => "V_bw",
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Series::UFw | Series::VFw => Direction::Forward,
            Series::UBw | Series::VBw => Direction::Backward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityRow {
    pub index: usize,
    pub series: Series,
    pub fidelity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReciprocityRow {
    pub index: usize,
    /// `U` or `V`.
    pub gadget: &'static str,
    pub reciprocity: f64,
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                std_dev: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_dev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n,
            mean,
            std_dev,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Counts per bin `[lower, lower + width)`, covering the observed range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<(f64, usize)>,
}

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.001;

impl Histogram {
    pub fn of(values: &[f64], bin_width: f64) -> Self {
        let index = |v: f64| (v / bin_width + 1e-9).floor() as i64;
        let (Some(lo), Some(hi)) = (
            values.iter().map(|&v| index(v)).min(),
            values.iter().map(|&v| index(v)).max(),
        ) else {
            return Self {
                bin_width,
                bins: Vec::new(),
            };
        };
        let mut counts = vec![0usize; (hi - lo + 1) as usize];
        for &v in values {
            counts[(index(v) - lo) as usize] += 1;
        }
        let bins = counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| ((lo + k as i64) as f64 * bin_width, c))
            .collect();
        Self { bin_width, bins }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Characterization {
    pub fidelities: Vec<FidelityRow>,
    pub reciprocities: Vec<ReciprocityRow>,
}

impl Characterization {
    pub fn series(&self, series: Series) -> Vec<f64> {
        self.fidelities
            .iter()
            .filter(|r| r.series == series)
            .map(|r| r.fidelity)
            .collect()
    }

    pub fn all_fidelities(&self) -> Vec<f64> {
        self.fidelities.iter().map(|r| r.fidelity).collect()
    }

    pub fn all_reciprocities(&self) -> Vec<f64> {
        self.reciprocities.iter().map(|r| r.reciprocity).collect()
    }
}

fn unit_rng(seed: u64, index: usize, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 8) | slot);
    rng
}

/// Characterizes `count` Haar-random unitaries, each implemented on both the `U` and the
/// `V` gadget and probed in both directions, plus the reciprocity of each gadget.
pub fn characterize(count: usize, noise: &TomographyNoise, seed: u64) -> Result<Characterization> {
    noise.validate()?;
    let mut fidelities = Vec::with_capacity(4 * count);
    let mut reciprocities = Vec::with_capacity(2 * count);
    for index in 0..count {
        let target = random_unitary(&mut unit_rng(seed, index, 0));
        let angles = synthesize(&target)?;
        for (slot, series) in Series::ALL.iter().enumerate() {
            let mut rng = unit_rng(seed, index, 1 + slot as u64);
            fidelities.push(FidelityRow {
                index,
                series: *series,
                fidelity: gate_fidelity(&angles, series.direction(), &target, noise, &mut rng)?,
            });
        }
        for (slot, gadget) in ["U", "V"].into_iter().enumerate() {
            let mut rng = unit_rng(seed, index, 5 + slot as u64);
            reciprocities.push(ReciprocityRow {
                index,
                gadget,
                reciprocity: reciprocity(&angles, noise, &mut rng)?,
            });
        }
    }
    Ok(Characterization {
        fidelities,
        reciprocities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{ket_fidelity, phase_equal};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn exact_measurements_of_h() {
        let rec = simulate_measurements(&Ket2::h().density(), Shots::Infinite, &mut rng(0)).unwrap();
        let [x, y, z] = rec.expectations;
        assert!(x.abs() < 1e-15 && y.abs() < 1e-15 && (z - 1.0).abs() < 1e-15);
        let rec = simulate_measurements(&Ket2::l().density(), Shots::Infinite, &mut rng(0)).unwrap();
        assert!((rec.expectations[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn finite_shots_concentrate() {
        let n = 10_000u64;
        let rec = simulate_measurements(&Ket2::plus().density(), Shots::Finite(n), &mut rng(3)).unwrap();
        assert!((rec.expectations[0] - 1.0).abs() <= 4.0 / (n as f64).sqrt());
        assert!(rec.expectations[2].abs() <= 4.0 / (n as f64).sqrt());
        assert!(simulate_measurements(&Ket2::plus().density(), Shots::Finite(0), &mut rng(3)).is_err());
    }

    #[test]
    fn measurement_is_seed_deterministic() {
        let s = Ket2::l().density();
        let a = simulate_measurements(&s, Shots::Finite(500), &mut rng(9)).unwrap();
        let b = simulate_measurements(&s, Shots::Finite(500), &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_inversion_examples() {
        let rec = simulate_measurements(&Ket2::l().density(), Shots::Infinite, &mut rng(0)).unwrap();
        let rho = reconstruct_state(&rec).unwrap();
        assert!(rho.matrix().approx_eq(&Ket2::l().projector(), 1e-12));

        let rec = simulate_measurements(&Ket2::plus().density(), Shots::Finite(10_000), &mut rng(1)).unwrap();
        let rho = reconstruct_state(&rec).unwrap();
        assert!(state_fidelity(&rho, &Ket2::plus().density()) > 0.99);

        let unphysical = MeasurementRecord {
            shots: Shots::Infinite,
            plus_counts: [0; 3],
            expectations: [1.0, 1.0, 1.0],
        };
        let rho = reconstruct_state(&unphysical).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        let (lo, _) = crate::su2::hermitian_eigenvalues(&rho.matrix());
        assert!(lo >= -1e-12);
        // The clipped state points along (1,1,1)/√3.
        let (x, y, z) = crate::su2::bloch_expectations(&rho);
        let s = 1.0 / 3f64.sqrt();
        assert!((x - s).abs() < 1e-12 && (y - s).abs() < 1e-12 && (z - s).abs() < 1e-12);
    }

    #[test]
    fn inversion_is_exact_for_random_pure_states() {
        let mut r = rng(21);
        for _ in 0..100 {
            let psi = random_unitary(&mut r).apply(&Ket2::h());
            let res = tomograph(&psi.density(), &psi.density(), Shots::Infinite, &mut r).unwrap();
            assert!(res.fidelity >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn haar_samples_are_special_unitary() {
        let mut r = rng(2);
        for _ in 0..1000 {
            let u = random_unitary(&mut r);
            assert!(u.is_unitary(1e-12));
            assert!((u.det() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let a = random_unitary(&mut rng(5));
        let b = random_unitary(&mut rng(5));
        assert_eq!(a, b);
    }

    #[test]
    fn haar_second_moment() {
        // E|tr U / 2|² = 1/4 for Haar SU(2); also E|<0|U|0>|² = 1/2.
        let mut r = rng(17);
        let n = 100_000;
        let (mut m2, mut p00) = (0.0, 0.0);
        for _ in 0..n {
            let u = random_unitary(&mut r);
            m2 += (u.trace() * 0.5).norm_sqr();
            p00 += u.get(0, 0).norm_sqr();
        }
        m2 /= n as f64;
        p00 /= n as f64;
        assert!((m2 - 0.25).abs() < 0.0025, "{m2}");
        assert!((p00 - 0.5).abs() < 0.005, "{p00}");
    }

    #[test]
    fn noiseless_pipelines_are_perfect() {
        let mut r = rng(4);
        let noise = TomographyNoise::noiseless();
        for _ in 0..20 {
            let u = random_unitary(&mut r);
            let angles = synthesize(&u).unwrap();
            for d in [Direction::Forward, Direction::Backward] {
                let f = gate_fidelity(&angles, d, &u, &noise, &mut r).unwrap();
                assert!(f >= 1.0 - 1e-9, "{f}");
            }
            assert!(reciprocity(&angles, &noise, &mut r).unwrap() >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn gate_fidelity_detects_wrong_target() {
        let mut r = rng(4);
        let u = random_unitary(&mut r);
        let v = random_unitary(&mut r);
        assert!(!phase_equal(&u, &v, 1e-3).unwrap());
        let angles = synthesize(&u).unwrap();
        let f = gate_fidelity(&angles, Direction::Forward, &v, &TomographyNoise::noiseless(), &mut r).unwrap();
        let oracle = 0.5
            * (ket_fidelity(&u.apply(&Ket2::h()), &v.apply(&Ket2::h()))
                + ket_fidelity(&u.apply(&Ket2::plus()), &v.apply(&Ket2::plus())));
        assert!((f - oracle).abs() < 1e-9);
        assert!(f < 1.0 - 1e-6);
    }

    #[test]
    fn default_noise_characterization_lands_in_band() {
        let c = characterize(30, &TomographyNoise::default_noise(), 3).unwrap();
        let f = Summary::of(&c.all_fidelities());
        let rec = Summary::of(&c.all_reciprocities());
        assert!((0.99..=1.0).contains(&f.mean), "{f:?}");
        assert!((0.99..=1.0).contains(&rec.mean), "{rec:?}");
        assert!(rec.mean < 1.0);
        assert_eq!(c.fidelities.len(), 120);
        assert_eq!(c.series(Series::VBw).len(), 30);
    }

    #[test]
    fn shot_noise_variance_scales_inversely() {
        let angles = synthesize(&random_unitary(&mut rng(8))).unwrap();
        let spread = |shots: u64| {
            let noise = TomographyNoise {
                waveplate_angle_jitter_sigma: 0.0,
                shots,
            };
            let mut r = rng(shots);
            let v: Vec<f64> = (0..400)
                .map(|_| reciprocity(&angles, &noise, &mut r).unwrap())
                .collect();
            Summary::of(&v)
        };
        let coarse = spread(1_000);
        let fine = spread(10_000);
        let ratio = coarse.std_dev.powi(2) / fine.std_dev.powi(2);
        assert!((5.0..20.0).contains(&ratio), "{ratio}");
        assert!(fine.mean > coarse.mean && fine.mean > 0.995);
    }

    #[test]
    fn summary_uses_sample_std() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn histogram_bins() {
        let h = Histogram::of(&[0.9985, 0.9981, 0.9992, 1.0], HISTOGRAM_BIN_WIDTH);
        let counts: Vec<usize> = h.bins.iter().map(|b| b.1).collect();
        assert_eq!(counts, vec![2, 1, 1]);
        assert!((h.bins[0].0 - 0.998).abs() < 1e-12);
        assert!(Histogram::of(&[], 0.001).bins.is_empty());
    }
}
