#![allow(dead_code)]

use std::path::Path;

use decaylab::config::{KeyValues, ModelSpec};
use decaylab::models::{make_breit_wigner, BreitWignerParams, BuggParams};
use decaylab::spectral::{Energy, SpectralDensity};

pub const BUGG_CFG: &str = include_str!("../../../../configs/bugg_sigma.cfg");
pub const E_TH: f64 = 2.0 * 0.13957;

pub fn bugg_params() -> BuggParams {
    let kv = KeyValues::parse(BUGG_CFG, "configs/bugg_sigma.cfg").unwrap();
    match ModelSpec::from_key_values(&kv, Path::new(".")).unwrap() {
        ModelSpec::Bugg(p) => p,
        other => panic!("unexpected model {other:?}"),
    }
}

pub fn bugg() -> SpectralDensity {
    ModelSpec::Bugg(bugg_params()).build(20.0).unwrap().density
}

pub fn sigma_bw_params() -> BreitWignerParams {
    BreitWignerParams::new(0.542, 0.498, E_TH, 1.1)
}

pub fn bw(p: BreitWignerParams) -> SpectralDensity {
    make_breit_wigner(p)
        .unwrap()
        .normalize(Energy(p.e_th + 20.0))
        .unwrap()
}

pub fn bw_r(r: f64) -> SpectralDensity {
    bw(sigma_bw_params().with_r_ratio(r))
}
