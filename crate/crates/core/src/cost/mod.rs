//! Analytical throughput, power and area estimate for one crossbar LSTM unit,
//! plus the noise-magnitude formulas used to size its converters.
//!
//! One operation is one multiply-accumulate: a full read of an `R x C` array
//! performs `R * C` operations. (Many GOP/s figures count two operations per
//! MAC; this model does not.)

mod noise;
mod reference;
pub mod units;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use noise::{enob, johnson_noise, quantization_noise_v, shot_noise, snr_db_for_enob, BOLTZMANN, ELEMENTARY_CHARGE};
pub use reference::{reference_platforms, render_comparison_csv, render_comparison_text, ReferencePlatform};
use units::{GopPerSecond, Hertz, Joules, Meters, Ohms, Seconds, SquareMeters, Volts, Watts};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HwParams {
    pub rows: usize,
    pub cols: usize,
    /// Full-array read latency.
    pub t_read: Seconds,
    /// Activation lookup latency.
    pub t_act: Seconds,
    /// Elementwise multiply/add latency.
    pub t_elem: Seconds,
    pub num_adcs: usize,
    pub f_sample: Hertz,
    pub adc_bits: u32,
    pub v_read: Volts,
    /// Average cell resistance.
    pub r_avg: Ohms,
    /// Cell pitch.
    pub pitch: Meters,
    /// ADC energy per sample below the ENOB knee.
    pub e_adc_low: Joules,
    pub enob_knee: f64,
    /// Area of one ADC at or below the growth threshold.
    pub adc_area_4bit: SquareMeters,
    /// Area multiplier per additional bit above the growth threshold.
    pub area_growth: f64,
    /// Bits above which ADC area starts growing.
    pub area_growth_threshold: u32,
    /// DACs, multiplexers, buffers, activation and elementwise units.
    pub residual_power: Watts,
    pub residual_area: SquareMeters,
    /// Identical arrays working in parallel (each with its own ADCs).
    pub parallel_arrays: u32,
}

impl Default for HwParams {
    fn default() -> Self {
        Self {
            rows: 356,
            cols: 1024,
            t_read: Seconds(100e-9),
            t_act: Seconds(5e-9),
            t_elem: Seconds(1e-9),
            num_adcs: 64,
            f_sample: Hertz(160e6),
            adc_bits: 4,
            v_read: Volts(1.0),
            r_avg: Ohms(1e6),
            pitch: Meters(400e-9),
            e_adc_low: Joules::from_pj(1.0),
            enob_knee: 9.0,
            adc_area_4bit: SquareMeters::from_mm2(0.01),
            area_growth: 2.15,
            area_growth_threshold: 6,
            residual_power: Watts(0.762),
            residual_area: SquareMeters::from_mm2(0.333),
            parallel_arrays: 1,
        }
    }
}

impl HwParams {
    /// Checks positivity and that the multiplexed ADCs keep up with the read.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_read", self.t_read.0),
            ("t_act", self.t_act.0),
            ("t_elem", self.t_elem.0),
            ("f_sample", self.f_sample.0),
            ("v_read", self.v_read.0),
            ("r_avg", self.r_avg.0),
            ("pitch", self.pitch.0),
            ("e_adc_low", self.e_adc_low.0),
            ("enob_knee", self.enob_knee),
            ("adc_area_4bit", self.adc_area_4bit.0),
            ("area_growth", self.area_growth),
            ("residual_power", self.residual_power.0),
            ("residual_area", self.residual_area.0),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Infeasible(format!("{name} must be positive, got {v}")));
        }
        if self.rows == 0 || self.cols == 0 || self.adc_bits == 0 || self.parallel_arrays == 0 {
            return Err(Error::Infeasible("array size, ADC bits and array count must be positive".into()));
        }
        if self.num_adcs == 0 || !self.cols.is_multiple_of(self.num_adcs) {
            return Err(Error::Infeasible(format!("{} ADCs do not divide {} columns", self.num_adcs, self.cols)));
        }
        let needed = self.adc_conversion_time();
        // Relative slack absorbs rounding in cols / (adcs * rate).
        if needed.0 > self.t_read.0 * (1.0 + 1e-9) {
            return Err(Error::Infeasible(format!(
                "{} columns on {} ADCs at {} S/s need {:.3e} s per read, above t_read = {:.3e} s",
                self.cols, self.num_adcs, self.f_sample.0, needed.0, self.t_read.0
            )));
        }
        Ok(())
    }

    pub fn columns_per_adc(&self) -> usize {
        self.cols / self.num_adcs
    }

    /// Time for the shared ADCs to digitize every column once.
    pub fn adc_conversion_time(&self) -> Seconds {
        Seconds(self.cols as f64 / (self.num_adcs as f64 * self.f_sample.0))
    }

    fn ops_per_read(&self) -> f64 {
        (self.rows * self.cols) as f64 * self.parallel_arrays as f64
    }
}

/// `(vmm, overall)` throughput.
pub fn throughput(p: &HwParams) -> Result<(GopPerSecond, GopPerSecond)> {
    p.validate()?;
    let ops = p.ops_per_read();
    let vmm = ops / p.t_read.0;
    let overall = ops / (p.t_read + p.t_act + p.t_elem).0;
    Ok((GopPerSecond(vmm * 1e-9), GopPerSecond(overall * 1e-9)))
}

/// Flat below the knee, quadrupling per effective bit above it.
pub fn adc_energy_per_sample(enob: f64, p: &HwParams) -> Joules {
    if enob < p.enob_knee {
        p.e_adc_low
    } else {
        p.e_adc_low * 2f64.powf(2.0 * (enob - p.enob_knee))
    }
}

/// Area of a single ADC with `bits` of resolution.
pub fn adc_unit_area(bits: u32, p: &HwParams) -> SquareMeters {
    if bits <= p.area_growth_threshold {
        p.adc_area_4bit
    } else {
        p.adc_area_4bit * p.area_growth.powi((bits - p.area_growth_threshold) as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub adc: Watts,
    pub array: Watts,
    pub residual: Watts,
    pub total: Watts,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaBreakdown {
    pub adc: SquareMeters,
    pub array: SquareMeters,
    pub residual: SquareMeters,
    pub total: SquareMeters,
}

pub fn power(p: &HwParams) -> PowerBreakdown {
    let arrays = p.parallel_arrays as f64;
    let per_adc = adc_energy_per_sample(p.adc_bits as f64, p) * p.f_sample;
    let adc = per_adc * (p.num_adcs as f64 * arrays);
    let array = p.v_read.power_across(p.r_avg) * ((p.rows * p.cols) as f64 * arrays);
    let residual = p.residual_power;
    PowerBreakdown { adc, array, residual, total: adc + array + residual }
}

pub fn area(p: &HwParams) -> AreaBreakdown {
    let arrays = p.parallel_arrays as f64;
    let adc = adc_unit_area(p.adc_bits, p) * (p.num_adcs as f64 * arrays);
    let array = (p.pitch * p.pitch) * ((p.rows * p.cols) as f64 * arrays);
    let residual = p.residual_area;
    AreaBreakdown { adc, array, residual, total: adc + array + residual }
}

/// `(GOP/s/W, GOP/s/mm²)` for the overall throughput.
pub fn efficiencies(p: &HwParams) -> Result<(f64, f64)> {
    let (_, overall) = throughput(p)?;
    Ok((overall.0 / power(p).total.0, overall.0 / area(p).total.mm2()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub params: HwParams,
    pub vmm_throughput: GopPerSecond,
    pub overall_throughput: GopPerSecond,
    pub power: PowerBreakdown,
    pub area: AreaBreakdown,
    /// GOP/s per watt.
    pub computing_efficiency: f64,
    /// GOP/s per mm².
    pub area_efficiency: f64,
    pub comparison: Vec<ReferencePlatform>,
}

pub fn estimate(p: &HwParams) -> Result<CostReport> {
    let (vmm, overall) = throughput(p)?;
    let power = power(p);
    let area = area(p);
    Ok(CostReport {
        params: p.clone(),
        vmm_throughput: vmm,
        overall_throughput: overall,
        power,
        area,
        computing_efficiency: overall.0 / power.total.0,
        area_efficiency: overall.0 / area.total.mm2(),
        comparison: reference_platforms(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn default_throughput() {
        let (vmm, overall) = throughput(&HwParams::default()).unwrap();
        assert!(rel(vmm.0, 3645.0) < 1e-3, "{vmm}");
        assert!(rel(overall.0, 3439.0) < 1e-3, "{overall}");
    }

    #[test]
    fn unit_array_throughput() {
        let p = HwParams {
            rows: 1,
            cols: 1,
            num_adcs: 1,
            t_read: Seconds(1.0),
            t_act: Seconds(1e-30),
            t_elem: Seconds(1e-30),
            f_sample: Hertz(1.0),
            ..Default::default()
        };
        let (vmm, _) = throughput(&p).unwrap();
        assert!(rel(vmm.0, 1e-9) < 1e-12);
    }

    #[test]
    fn slow_adcs_are_infeasible() {
        let p = HwParams { f_sample: Hertz(100e6), ..Default::default() };
        assert!(matches!(throughput(&p), Err(Error::Infeasible(_))));
        let p = HwParams { num_adcs: 48, ..Default::default() };
        assert!(matches!(throughput(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn adc_energy_knee() {
        let p = HwParams::default();
        assert_eq!(adc_energy_per_sample(4.0, &p).pj(), 1.0);
        assert_eq!(adc_energy_per_sample(9.0, &p).pj(), 1.0);
        assert_eq!(adc_energy_per_sample(12.0, &p).pj(), 64.0);
        assert_eq!(adc_energy_per_sample(10.0, &p).pj(), 4.0);
    }

    #[test]
    fn power_parts() {
        let p = HwParams::default();
        let pw = power(&p);
        assert!(rel(pw.adc.0 / 64.0, 0.16e-3) < 1e-12);
        assert!(rel(pw.array.0, 0.364) < 0.01);
        assert!(rel(pw.total.0, 1.136) < 0.01);
        assert_eq!(pw.total, pw.adc + pw.array + pw.residual);
        let twelve = power(&HwParams { adc_bits: 12, ..p });
        assert!(rel(twelve.adc.0, 0.64) < 0.03);
    }

    #[test]
    fn area_parts() {
        let p = HwParams::default();
        let a = area(&p);
        assert!(rel(a.adc.mm2(), 0.64) < 1e-9);
        assert!(rel(a.array.mm2(), 0.058) < 0.01);
        assert!(rel(a.total.mm2(), 1.031) < 0.01);
        assert!(rel(adc_unit_area(12, &p).mm2(), 1.0) < 0.15);
    }

    #[test]
    fn efficiency_ratio_law() {
        let p = HwParams::default();
        let (ce, ae) = efficiencies(&p).unwrap();
        assert!(rel(ce, 3027.0) < 0.01);
        assert!(rel(ae, 3333.0) < 0.01);
        let base = estimate(&p).unwrap();
        let doubled = HwParams { residual_power: p.residual_power + power(&p).total, ..p };
        let (ce2, _) = efficiencies(&doubled).unwrap();
        assert!(rel(ce2, base.computing_efficiency / 2.0) < 1e-12);
    }

    #[test]
    fn monotone_in_adc_bits() {
        let mut last = (0.0, 0.0);
        for bits in 1..=16 {
            let p = HwParams { adc_bits: bits, ..Default::default() };
            let now = (power(&p).adc.0, area(&p).adc.0);
            assert!(now.0 >= last.0 && now.1 >= last.1);
            last = now;
        }
        let small = power(&HwParams { rows: 178, ..Default::default() }).array.0;
        assert!(rel(2.0 * small, power(&HwParams::default()).array.0) < 1e-12);
    }
}
