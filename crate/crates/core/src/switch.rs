//! Quantum SWITCH evolution: the ideal two-order superposition and a Sagnac-level model
//! with waveplate jitter, imperfect interference, circulator loss, unequal detector
//! efficiencies and Poisson photon counting.
//!
//! Geometry: a directional coupler splits the photon into the clockwise and
//! counter-clockwise directions of a loop holding the `U` and `V` gadgets. Clockwise the
//! photon meets `V` then `U` (forward matrices, giving `UV`); counter-clockwise it meets
//! `U` then `V` (backward matrices, giving `VU`). On the way out the coupler sends the
//! symmetric combination to the input port (`+`, which is picked off by the circulator)
//! and the antisymmetric one to the other port (`-`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::discrimination::{enumerate_pairs, GateSet, PairClass};
use crate::error::{Error, Result};
use crate::gadget::{synthesize, GadgetAngles};
use crate::optics::{Direction, ElementSequence};
use crate::su2::{anticommutator, commutator, su2_canonicalize, Ket2, Matrix2};

/// Output of the ideal SWITCH with a `|+>` control and a final Hadamard:
/// `½{U,V}|ψ> ⊗ |0> + ½[U,V]|ψ> ⊗ |1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchOutput {
    /// Target amplitudes conditioned on control `|0>` (commute port).
    pub commute: [Complex64; 2],
    /// Target amplitudes conditioned on control `|1>` (anti-commute port).
    pub anticommute: [Complex64; 2],
}

impl SwitchOutput {
    /// Joint amplitudes ordered as target ⊗ control: `|H0>, |H1>, |V0>, |V1>`.
    pub fn joint(&self) -> [Complex64; 4] {
        [
            self.commute[0],
            self.anticommute[0],
            self.commute[1],
            self.anticommute[1],
        ]
    }

    pub fn probabilities(&self) -> (f64, f64) {
        let p = |a: &[Complex64; 2]| a[0].norm_sqr() + a[1].norm_sqr();
        (p(&self.commute), p(&self.anticommute))
    }
}

pub fn ideal_output(u: &Matrix2, v: &Matrix2, psi: &Ket2) -> Result<SwitchOutput> {
    u.ensure_unitary()?;
    v.ensure_unitary()?;
    let plus = (anticommutator(u, v) * 0.5).apply(psi).amplitudes();
    let minus = (commutator(u, v) * 0.5).apply(psi).amplitudes();
    Ok(SwitchOutput {
        commute: plus,
        anticommute: minus,
    })
}

/// `(¼‖{U,V}ψ‖², ¼‖[U,V]ψ‖²)`.
pub fn port_probabilities(u: &Matrix2, v: &Matrix2, psi: &Ket2) -> Result<(f64, f64)> {
    Ok(ideal_output(u, v, psi)?.probabilities())
}

/// One discrimination setting: gate indices into [`GateSet`] and the target input state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchSetting {
    pub u_index: usize,
    pub v_index: usize,
    pub target_state: Ket2,
}

impl SwitchSetting {
    pub fn new(u_index: usize, v_index: usize, target_state: Ket2) -> Result<Self> {
        if u_index >= 10 || v_index >= 10 {
            return Err(Error::InvalidInput(format!(
                "gate indices ({u_index}, {v_index}) out of range 0..9"
            )));
        }
        Ok(Self {
            u_index,
            v_index,
            target_state,
        })
    }
}

/// Experimental imperfections. Field names double as the TOML keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the Gaussian error on each waveplate orientation, radians.
    pub waveplate_angle_jitter_sigma: f64,
    /// Fraction of power the coupler sends into the clockwise direction.
    pub tdc_splitting: f64,
    /// Damping of the interference cross terms.
    pub interferometric_visibility: f64,
    /// Loss of one circulator pass, applied to the `+` port only.
    pub circulator_loss_db_per_pass: f64,
    /// Detection efficiency indexed `[port][polarization]`, port 0 = `+`, pol 0 = H.
    pub detector_efficiency: [[f64; 2]; 2],
    /// Heralded photons per second entering the interferometer.
    pub mean_photon_rate: f64,
    /// Integration time per setting, seconds.
    pub integration_time: f64,
    pub rng_seed: u64,
    /// Report exact expected counts instead of Poisson samples.
    #[serde(default)]
    pub infinite_statistics: bool,
}

impl NoiseModel {
    /// A perfect apparatus (unit efficiencies, no loss, no jitter) with exact statistics.
    pub fn noiseless() -> Self {
        Self {
            waveplate_angle_jitter_sigma: 0.0,
            tdc_splitting: 0.5,
            interferometric_visibility: 1.0,
            circulator_loss_db_per_pass: 0.0,
            detector_efficiency: [[1.0; 2]; 2],
            mean_photon_rate: 1.0e4,
            integration_time: 60.0,
            rng_seed: 0,
            infinite_statistics: true,
        }
    }

    /// Placeholder calibration: 0.1° jitter, balanced coupler, visibility 0.9995,
    /// 1 dB circulator pass, efficiencies of 0.95/0.90, 10⁴ photons/s for 60 s.
    pub fn calibrated_default() -> Self {
        Self {
            waveplate_angle_jitter_sigma: 0.1f64.to_radians(),
            tdc_splitting: 0.5,
            interferometric_visibility: 0.9995,
            circulator_loss_db_per_pass: 1.0,
            detector_efficiency: [[0.95, 0.90], [0.90, 0.95]],
            mean_photon_rate: 1.0e4,
            integration_time: 60.0,
            rng_seed: 7,
            infinite_statistics: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fraction = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        let nonnegative = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{name} must be finite and nonnegative, got {x}"
                )))
            }
        };
        nonnegative("waveplate_angle_jitter_sigma", self.waveplate_angle_jitter_sigma)?;
        fraction("tdc_splitting", self.tdc_splitting)?;
        fraction("interferometric_visibility", self.interferometric_visibility)?;
        nonnegative("circulator_loss_db_per_pass", self.circulator_loss_db_per_pass)?;
        for row in &self.detector_efficiency {
            for &eta in row {
                fraction("detector_efficiency", eta)?;
            }
        }
        nonnegative("mean_photon_rate", self.mean_photon_rate)?;
        nonnegative("integration_time", self.integration_time)?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let model: NoiseModel = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        model
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(model)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn plus_port_transmission(&self) -> f64 {
        10f64.powf(-self.circulator_loss_db_per_pass / 10.0)
    }
}

/// Polarization-resolved detections for one setting in one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountsRecord {
    pub run: u32,
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
    /// Sampled counts `[port][pol]` (port 0 = `+`, pol 0 = H).
    pub counts: [[u64; 2]; 2],
    /// Mean counts the samples were drawn from.
    pub expected: [[f64; 2]; 2],
    /// Whether the record stands for infinite statistics.
    pub exact: bool,
}

impl CountsRecord {
    /// Counts used for analysis: the expectation for exact records, samples otherwise.
    pub fn observed(&self) -> [[f64; 2]; 2] {
        if self.exact {
            self.expected
        } else {
            self.counts.map(|row| row.map(|n| n as f64))
        }
    }

    /// Polarization-summed `(n+, n-)`.
    pub fn port_totals(&self) -> (f64, f64) {
        let o = self.observed();
        (o[0][0] + o[0][1], o[1][0] + o[1][1])
    }

    /// Raw fraction of detections in the commute port.
    pub fn commute_fraction(&self) -> f64 {
        let (plus, minus) = self.port_totals();
        plus / (plus + minus)
    }
}

/// Identifier of the independent random stream for `(run, i, j)`.
fn stream_id(run: u32, i: usize, j: usize) -> u64 {
    ((run as u64) << 16) | ((i as u64) << 8) | j as u64
}

fn stream_rng(seed: u64, run: u32, i: usize, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(run, i, j));
    rng
}

/// Sagnac SWITCH simulator with the gadget angles for every gate precomputed.
#[derive(Clone, Debug)]
pub struct SwitchSimulator {
    gates: [Matrix2; 10],
    trains: [ElementSequence; 10],
}

impl SwitchSimulator {
    pub fn new() -> Result<Self> {
        let set = GateSet::new();
        let mut gates = [Matrix2::identity(); 10];
        let mut trains: [ElementSequence; 10] = Default::default();
        for (k, g) in set.gates().iter().enumerate() {
            gates[k] = *g;
            let angles: GadgetAngles = synthesize(g)?;
            trains[k] = angles.reduced_sequence();
        }
        Ok(Self { gates, trains })
    }

    pub fn simulate(
        &self,
        setting: &SwitchSetting,
        noise: &NoiseModel,
        run: u32,
    ) -> Result<CountsRecord> {
        noise.validate()?;
        let (i, j) = (setting.u_index, setting.v_index);
        if i >= 10 || j >= 10 {
            return Err(Error::InvalidInput(format!(
                "gate indices ({i}, {j}) out of range 0..9"
            )));
        }
        let class = crate::discrimination::classify_matrices(&self.gates[i], &self.gates[j]);
        let mut rng = stream_rng(noise.rng_seed, run, i, j);

        let jitter = Normal::new(0.0, noise.waveplate_angle_jitter_sigma)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let u_train = self.trains[i].perturb_waveplates(|| jitter.sample(&mut rng));
        let v_train = self.trains[j].perturb_waveplates(|| jitter.sample(&mut rng));

        let psi = setting.target_state;
        let clockwise = (u_train.matrix(Direction::Forward)? * v_train.matrix(Direction::Forward)?)
            .apply(&psi)
            .amplitudes();
        let counter = (v_train.matrix(Direction::Backward)? * u_train.matrix(Direction::Backward)?)
            .apply(&psi)
            .amplitudes();

        let t = noise.tdc_splitting;
        let r = 1.0 - t;
        let vis = noise.interferometric_visibility;
        let mut intensity = [[0.0; 2]; 2];
        for pol in 0..2 {
            let (a, b) = (clockwise[pol], counter[pol]);
            let cross = (a.conj() * b).re;
            intensity[0][pol] =
                t * t * a.norm_sqr() + r * r * b.norm_sqr() + 2.0 * vis * t * r * cross;
            intensity[1][pol] = t * r * (a.norm_sqr() + b.norm_sqr() - 2.0 * vis * cross);
        }

        let photons = noise.mean_photon_rate * noise.integration_time;
        let mut expected = [[0.0; 2]; 2];
        let mut counts = [[0u64; 2]; 2];
        for port in 0..2 {
            let loss = if port == 0 {
                noise.plus_port_transmission()
            } else {
                1.0
            };
            for pol in 0..2 {
                let mean = (photons * intensity[port][pol].max(0.0)
                    * noise.detector_efficiency[port][pol]
                    * loss)
                    .max(0.0);
                expected[port][pol] = mean;
                counts[port][pol] = if noise.infinite_statistics || mean == 0.0 {
                    mean.round() as u64
                } else {
                    Poisson::new(mean)
                        .map_err(|e| Error::InvalidInput(e.to_string()))?
                        .sample(&mut rng) as u64
                };
            }
        }

        Ok(CountsRecord {
            run,
            i,
            j,
            class,
            counts,
            expected,
            exact: noise.infinite_statistics,
        })
    }

    /// Runs every commuting and anti-commuting pair `runs` times (ordered by run, then pair).
    pub fn run_protocol(
        &self,
        noise: &NoiseModel,
        runs: u32,
        target: Ket2,
    ) -> Result<Vec<CountsRecord>> {
        if runs == 0 {
            return Err(Error::InvalidInput("runs must be at least 1".into()));
        }
        let pairs = enumerate_pairs().all();
        let mut out = Vec::with_capacity(pairs.len() * runs as usize);
        for run in 0..runs {
            for p in &pairs {
                let setting = SwitchSetting::new(p.i, p.j, target)?;
                out.push(self.simulate(&setting, noise, run)?);
            }
        }
        Ok(out)
    }

    /// The SU(2)-lifted gate the simulator targets for index `k`.
    pub fn lifted_gate(&self, k: usize) -> Result<Matrix2> {
        su2_canonicalize(&self.gates[k])
    }
}

/// Simulates one setting for run 0.
pub fn simulate_counts(setting: &SwitchSetting, noise: &NoiseModel) -> Result<CountsRecord> {
    SwitchSimulator::new()?.simulate(setting, noise, 0)
}

/// Straight-line fit of total detections against the raw commute-port fraction.
///
/// Photon-number conservation makes the total interpolate between `N η-` at fraction 0
/// and `N η+` at fraction 1, so `η+/η- = (intercept + slope) / intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfficiencyFit {
    pub intercept: f64,
    pub slope: f64,
    /// Fitted `η+ / η-`.
    pub relative_efficiency: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrectedProbability {
    pub run: u32,
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
    pub raw_p_commute: f64,
    pub p_commute: f64,
    pub p_anticommute: f64,
}

impl CorrectedProbability {
    /// Probability mass in the class-correct port.
    pub fn success(&self) -> Option<f64> {
        match self.class {
            PairClass::Commute => Some(self.p_commute),
            PairClass::Anticommute => Some(self.p_anticommute),
            PairClass::Neither => None,
        }
    }

    pub fn raw_success(&self) -> Option<f64> {
        match self.class {
            PairClass::Commute => Some(self.raw_p_commute),
            PairClass::Anticommute => Some(1.0 - self.raw_p_commute),
            PairClass::Neither => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyCorrection {
    pub fit: EfficiencyFit,
    pub corrected: Vec<CorrectedProbability>,
}

/// Fits the relative port efficiency from all records and applies it:
/// `p+ = (n+/η+) / (n+/η+ + n-/η-)` with polarization-summed counts.
pub fn efficiency_correction(records: &[CountsRecord]) -> Result<EfficiencyCorrection> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let (plus, minus) = r.port_totals();
            (r.commute_fraction(), plus + minus)
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::Fit("need at least two settings".into()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || y.is_nan() || *y <= 0.0) {
        return Err(Error::Fit("a setting recorded no detections".into()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    if sxx < 1e-12 * n {
        return Err(Error::Fit(
            "all settings share the same commute fraction".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    if !intercept.is_finite() || intercept <= 0.0 || intercept + slope <= 0.0 {
        return Err(Error::Fit(format!(
            "fitted port efficiencies are not positive (intercept {intercept}, slope {slope})"
        )));
    }
    let kappa = (intercept + slope) / intercept;

    let corrected = records
        .iter()
        .map(|r| {
            let (plus, minus) = r.port_totals();
            let plus_c = plus / kappa;
            CorrectedProbability {
                run: r.run,
                i: r.i,
                j: r.j,
                class: r.class,
                raw_p_commute: plus / (plus + minus),
                p_commute: plus_c / (plus_c + minus),
                p_anticommute: minus / (plus_c + minus),
            }
        })
        .collect();
    Ok(EfficiencyCorrection {
        fit: EfficiencyFit {
            intercept,
            slope,
            relative_efficiency: kappa,
        },
        corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{pauli, rot, Axis, Pauli};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn haar_like(seed: u64) -> Matrix2 {
        // Deterministic spread of SU(2) elements; uniformity is irrelevant here.
        let s = seed as f64;
        rot(Axis::Z, 1.3 * s) * rot(Axis::Y, 0.7 * s + 0.2) * rot(Axis::Z, -2.1 * s)
    }

    #[test]
    fn ideal_output_examples() {
        let x = pauli(Pauli::X);
        let y = pauli(Pauli::Y);
        let z = pauli(Pauli::Z);
        let out = ideal_output(&x, &x, &Ket2::h()).unwrap();
        assert_eq!(out.probabilities(), (1.0, 0.0));

        let out = ideal_output(&x, &y, &Ket2::l()).unwrap();
        let (p0, p1) = out.probabilities();
        assert!(p0 < 1e-15 && (p1 - 1.0).abs() < 1e-15);

        // Oracle: {X, (X+Z)/√2} = √2·1, [X, (X+Z)/√2] = [X,Z]/√2 = -√2 i Y, so on |H>
        // the two ports get ¼·2 = ½ each.
        let xz = (x + z) * FRAC_1_SQRT_2;
        let (p0, p1) = port_probabilities(&x, &xz, &Ket2::h()).unwrap();
        assert!((p0 - 0.5).abs() < 1e-15 && (p1 - 0.5).abs() < 1e-15);
        let norm: f64 = ideal_output(&x, &xz, &Ket2::h())
            .unwrap()
            .joint()
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_and_z_commute_on_plus() {
        let (p0, p1) =
            port_probabilities(&Matrix2::identity(), &pauli(Pauli::Z), &Ket2::plus()).unwrap();
        assert!((p0 - 1.0).abs() < 1e-15 && p1 < 1e-30);
    }

    #[test]
    fn probability_is_conserved() {
        for k in 0..40 {
            let u = haar_like(k);
            let v = haar_like(k + 100);
            let psi = haar_like(k + 7).apply(&Ket2::h());
            let (p0, p1) = port_probabilities(&u, &v, &psi).unwrap();
            assert!((p0 + p1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn task_pairs_are_target_independent() {
        let set = GateSet::new();
        for pair in enumerate_pairs().all() {
            let (u, v) = (set.gates()[pair.i], set.gates()[pair.j]);
            let reference = port_probabilities(&u, &v, &Ket2::plus()).unwrap();
            for k in 0..50 {
                let psi = haar_like(k + 3).apply(&Ket2::h());
                let p = port_probabilities(&u, &v, &psi).unwrap();
                assert!((p.0 - reference.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_simulation_matches_ideal() {
        let sim = SwitchSimulator::new().unwrap();
        let noise = NoiseModel::noiseless();
        let photons = noise.mean_photon_rate * noise.integration_time;
        let set = GateSet::new();
        for pair in enumerate_pairs().all() {
            for psi in [Ket2::plus(), Ket2::h(), Ket2::l()] {
                let setting = SwitchSetting::new(pair.i, pair.j, psi).unwrap();
                let rec = sim.simulate(&setting, &noise, 0).unwrap();
                let (p0, p1) =
                    port_probabilities(&set.gates()[pair.i], &set.gates()[pair.j], &psi).unwrap();
                let (n0, n1) = rec.port_totals();
                assert!((n0 / photons - p0).abs() < 1e-12, "{pair:?}");
                assert!((n1 / photons - p1).abs() < 1e-12, "{pair:?}");
            }
        }
    }

    #[test]
    fn noiseless_simulation_matches_ideal_for_non_task_pairs() {
        // The gadgets implement arbitrary gates, so the simulator must also split "neither"
        // pairs exactly like the ideal SWITCH.
        let sim = SwitchSimulator::new().unwrap();
        let noise = NoiseModel::noiseless();
        let photons = noise.mean_photon_rate * noise.integration_time;
        let set = GateSet::new();
        let setting = SwitchSetting::new(4, 6, Ket2::h()).unwrap();
        let rec = sim.simulate(&setting, &noise, 0).unwrap();
        let (p0, _) = port_probabilities(&set.gates()[4], &set.gates()[6], &Ket2::h()).unwrap();
        assert!((rec.port_totals().0 / photons - p0).abs() < 1e-12);
        assert_eq!(rec.class, PairClass::Neither);
    }

    #[test]
    fn seeds_are_reproducible() {
        let sim = SwitchSimulator::new().unwrap();
        let noise = NoiseModel::calibrated_default();
        let setting = SwitchSetting::new(1, 2, Ket2::plus()).unwrap();
        let a = sim.simulate(&setting, &noise, 3).unwrap();
        let b = sim.simulate(&setting, &noise, 3).unwrap();
        assert_eq!(a, b);
        let c = sim.simulate(&setting, &noise, 4).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn rejects_invalid_models() {
        let sim = SwitchSimulator::new().unwrap();
        let setting = SwitchSetting::new(0, 0, Ket2::plus()).unwrap();
        let mut bad = NoiseModel::noiseless();
        bad.tdc_splitting = 1.5;
        assert!(sim.simulate(&setting, &bad, 0).is_err());
        let mut bad = NoiseModel::noiseless();
        bad.mean_photon_rate = -1.0;
        assert!(sim.simulate(&setting, &bad, 0).is_err());
        assert!(SwitchSetting::new(10, 0, Ket2::plus()).is_err());
        assert!(sim.run_protocol(&NoiseModel::noiseless(), 0, Ket2::plus()).is_err());
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let model = NoiseModel::calibrated_default();
        let text = model.to_toml().unwrap();
        assert_eq!(NoiseModel::from_toml(&text).unwrap(), model);
        let bad = format!("{text}\nextra_key = 1\n");
        assert!(matches!(NoiseModel::from_toml(&bad), Err(Error::Config(_))));
        let invalid = text.replace("tdc_splitting = 0.5", "tdc_splitting = 2.0");
        assert!(matches!(NoiseModel::from_toml(&invalid), Err(Error::Config(_))));
    }

    #[test]
    fn shipped_config_is_the_calibrated_default() {
        let text = include_str!("../configs/default.toml");
        assert_eq!(NoiseModel::from_toml(text).unwrap(), NoiseModel::calibrated_default());
    }

    fn synthetic(kappa: f64, infinite: bool) -> Vec<CountsRecord> {
        let sim = SwitchSimulator::new().unwrap();
        let mut noise = NoiseModel::noiseless();
        noise.detector_efficiency = [[kappa; 2], [1.0; 2]];
        noise.infinite_statistics = infinite;
        noise.rng_seed = 11;
        sim.run_protocol(&noise, 1, Ket2::plus()).unwrap()
    }

    #[test]
    fn equal_efficiencies_leave_probabilities_unchanged() {
        let records = synthetic(1.0, true);
        let corr = efficiency_correction(&records).unwrap();
        assert!((corr.fit.relative_efficiency - 1.0).abs() < 1e-12);
        for c in &corr.corrected {
            assert!((c.p_commute - c.raw_p_commute).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_port_imbalance_exactly_at_infinite_statistics() {
        // With fractions exactly 0 or 1 the fitted line passes through N·η- and N·η+.
        let corr = efficiency_correction(&synthetic(0.9, true)).unwrap();
        assert!((corr.fit.relative_efficiency - 0.9).abs() < 1e-12);
        assert!((corr.fit.intercept - 6.0e5).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_port_imbalance_within_poisson_error() {
        let records = synthetic(0.9, false);
        let corr = efficiency_correction(&records).unwrap();
        // σ(κ)/κ = sqrt(1/(28 N η+) + 1/(24 N η-)) with N = 6·10⁵.
        let n: f64 = 6.0e5;
        let sigma = 0.9 * (1.0 / (28.0 * n * 0.9) + 1.0 / (24.0 * n)).sqrt();
        assert!((corr.fit.relative_efficiency - 0.9).abs() < 3.0 * sigma);
        for c in &corr.corrected {
            let expected = if c.class == PairClass::Commute { 1.0 } else { 0.0 };
            assert!((c.p_commute - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_fit_is_rejected() {
        let records: Vec<_> = synthetic(0.9, true)
            .into_iter()
            .filter(|r| r.class == PairClass::Commute)
            .collect();
        assert!(matches!(efficiency_correction(&records), Err(Error::Fit(_))));
        assert!(matches!(efficiency_correction(&records[..1]), Err(Error::Fit(_))));
    }

    #[test]
    fn noiseless_poisson_counts_pass_chi_square() {
        // Poisson counts against their noiseless means across the 52 settings: the
        // statistic has 52·4 - (empty cells) degrees of freedom; 5σ above the mean is a
        // generous threshold at a fixed seed.
        let sim = SwitchSimulator::new().unwrap();
        let set = GateSet::new();
        let mut noise = NoiseModel::noiseless();
        noise.infinite_statistics = false;
        noise.rng_seed = 2024;
        noise.detector_efficiency = [[0.5, 1.0], [1.0, 0.5]];
        let photons = noise.mean_photon_rate * noise.integration_time;
        let psi = Ket2::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        let (mut chi2, mut dof) = (0.0, 0.0);
        for pair in enumerate_pairs().all() {
            let (u, v) = (set.gates()[pair.i], set.gates()[pair.j]);
            let out = ideal_output(&u, &v, &psi).unwrap();
            let rec = sim.simulate(&SwitchSetting::new(pair.i, pair.j, psi).unwrap(), &noise, 0).unwrap();
            for (port, amps) in [out.commute, out.anticommute].iter().enumerate() {
                for (pol, amp) in amps.iter().enumerate() {
                    let mean = photons * amp.norm_sqr() * noise.detector_efficiency[port][pol];
                    assert!((rec.expected[port][pol] - mean).abs() < 1e-6 * photons);
                    if mean > 1e-6 {
                        chi2 += (rec.counts[port][pol] as f64 - mean).powi(2) / mean;
                        dof += 1.0;
                    } else {
                        assert_eq!(rec.counts[port][pol], 0);
                    }
                }
            }
        }
        assert!(dof > 50.0);
        assert!((chi2 - dof).abs() < 5.0 * (2.0 * dof).sqrt(), "chi2 {chi2} dof {dof}");
    }

    #[test]
    fn correction_improves_calibrated_success() {
        let sim = SwitchSimulator::new().unwrap();
        let noise = NoiseModel::calibrated_default();
        let records = sim.run_protocol(&noise, 6, Ket2::plus()).unwrap();
        let corr = efficiency_correction(&records).unwrap();
        let n = corr.corrected.len() as f64;
        let raw: f64 = corr.corrected.iter().filter_map(|c| c.raw_success()).sum::<f64>() / n;
        let fixed: f64 = corr.corrected.iter().filter_map(|c| c.success()).sum::<f64>() / n;
        assert!(fixed > raw, "{fixed} vs {raw}");
        assert!((0.98..=1.0).contains(&fixed), "{fixed}");
        // 1 dB on the + port times 0.925 against 0.925 on the - port.
        let expected_kappa = 10f64.powf(-0.1);
        assert!((corr.fit.relative_efficiency - expected_kappa).abs() < 0.01);
    }

    #[test]
    fn jitter_does_not_improve_success() {
        let sim = SwitchSimulator::new().unwrap();
        let pairs = enumerate_pairs().all();
        let mean_success = |sigma: f64| {
            let mut total = 0.0;
            let mut n = 0.0;
            for seed in 0..8 {
                let mut noise = NoiseModel::noiseless();
                noise.waveplate_angle_jitter_sigma = sigma;
                noise.rng_seed = seed;
                for p in &pairs {
                    let setting = SwitchSetting::new(p.i, p.j, Ket2::plus()).unwrap();
                    let rec = sim.simulate(&setting, &noise, 0).unwrap();
                    let f = rec.commute_fraction();
                    total += if p.class == PairClass::Commute { f } else { 1.0 - f };
                    n += 1.0;
                }
            }
            total / n
        };
        let grid = [0.0, 0.5, 1.0, 2.0, 4.0].map(|d: f64| d.to_radians());
        let values: Vec<f64> = grid.iter().map(|&s| mean_success(s)).collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{values:?}");
        }
        assert!(values[4] < values[0]);
    }
}
