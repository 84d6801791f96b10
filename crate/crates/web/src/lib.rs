//! Browser bindings. Every method returns a flat `Float64Array` with a fixed
//! stride so the page can slice it without a serializer.

use nvq_core::blocks::Sizes;
use nvq_core::model::ModelParams;
use nvq_core::numerics::linspace;
use nvq_core::spectral::{ground_state_info, SpectralOptions, SpectrumSet};
use nvq_core::thermo::{ensemble, Ensemble};
use nvq_core::HalfInt;
use wasm_bindgen::prelude::*;

fn js(e: nvq_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Model {
    params: ModelParams,
    opts: SpectralOptions,
}

#[wasm_bindgen]
impl Model {
    /// `twice_omega` is 2Ω so half-integer NV sizes can be passed as integers.
    #[wasm_bindgen(constructor)]
    pub fn new(
        twice_omega: i64,
        omega1: i64,
        omega2: i64,
        anisotropy: f64,
        strain: f64,
        pairing: f64,
        coupling: f64,
    ) -> Result<Model, JsError> {
        let sizes = Sizes::new(HalfInt::from_twice(twice_omega), omega1, omega2).map_err(js)?;
        let params = ModelParams { d: anisotropy, e: strain, pairing, coupling, sizes, ..ModelParams::default() };
        params.validate().map_err(js)?;
        Ok(Model { params, opts: SpectralOptions::default() })
    }

    fn ensemble_at(&self, alpha: f64) -> Result<Ensemble, JsError> {
        ensemble(&self.params.with_alpha(alpha), None, &self.opts).map_err(js)
    }

    /// Stride 3: re, im, weight for every distinct eigenvalue at `alpha`.
    pub fn levels(&self, alpha: f64) -> Result<Vec<f64>, JsError> {
        let set = SpectrumSet::new(&self.params.with_alpha(alpha), false, &self.opts).map_err(js)?;
        Ok(set.weighted_eigenvalues().into_iter().flat_map(|(e, w)| [e.re, e.im, w as f64]).collect())
    }

    /// Stride 4: alpha, Re E0, Im E0, whether the ground level is complex.
    pub fn ground_curve(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
        let mut out = Vec::with_capacity(4 * n);
        for a in linspace(lo, hi, n) {
            let set = SpectrumSet::new(&self.params.with_alpha(a), false, &self.opts).map_err(js)?;
            let g = ground_state_info(&set.spectra, &self.opts).map_err(js)?;
            out.extend([a, g.energy.re, g.energy.im, g.is_complex as u8 as f64]);
        }
        Ok(out)
    }

    /// Stride 2: alpha, critical temperature (0 when Z never vanishes).
    pub fn tc_curve(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
        let mut out = Vec::with_capacity(2 * n);
        for a in linspace(lo, hi, n) {
            let tc = self.ensemble_at(a)?.critical_temperature(&self.opts).map_err(js)?;
            out.extend([a, tc]);
        }
        Ok(out)
    }

    /// Stride 6: T, F, U, S, C_V, valid. Points below the |Z| floor are NaN.
    pub fn thermo_curve(&self, alpha: f64, t_lo: f64, t_hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
        let ens = self.ensemble_at(alpha)?;
        let mut out = Vec::with_capacity(6 * n);
        for t in linspace(t_lo, t_hi, n) {
            match ens.potentials(t) {
                Ok(p) => out.extend([t, p.f, p.u, p.s, p.cv, p.valid() as u8 as f64]),
                Err(_) => out.extend([t, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0.0]),
            }
        }
        Ok(out)
    }
}
