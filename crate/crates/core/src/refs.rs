//! Small reference models used throughout the tests, benches and CLI docs.

use crate::model::{CocycleFn, FlowModel, RealFn};
use crate::sft::TransitionStructure;

pub fn golden_mean_ts() -> TransitionStructure {
    TransitionStructure::new(
        vec!["a".into(), "b".into()],
        &[vec![true, true], vec![true, false]],
    )
    .expect("golden mean shift is valid")
}

fn plus_minus(ts: &TransitionStructure) -> CocycleFn {
    CocycleFn::from_fn(ts, 1, 1, |w| vec![if w[0] == 0 { 1 } else { -1 }])
}

/// Full 2-shift with unit roof and cocycle `f(a) = +1, f(b) = -1`.
pub fn f2_unit() -> FlowModel {
    let ts = TransitionStructure::full_shift(&["a", "b"]);
    let r = RealFn::constant(&ts, 1.0);
    let f = plus_minus(&ts);
    FlowModel::new(ts, r, None, f).expect("F2 model is valid")
}

/// Golden mean shift with roof `r(a) = ra, r(b) = rb` and `f = ±1`.
pub fn golden_mean_with_roof(ra: f64, rb: f64) -> FlowModel {
    let ts = golden_mean_ts();
    let r = RealFn::from_fn(&ts, 1, |w| if w[0] == 0 { ra } else { rb });
    let f = plus_minus(&ts);
    FlowModel::new(ts, r, None, f).expect("golden mean model is valid")
}

/// Golden mean shift with unit roof.
pub fn golden_mean() -> FlowModel {
    golden_mean_with_roof(1.0, 1.0)
}

/// Golden mean shift with `r(a) = 1, r(b) = sqrt(2)/2` and `f = ±1`.
pub fn gm_irr() -> FlowModel {
    golden_mean_with_roof(1.0, std::f64::consts::FRAC_1_SQRT_2)
}

/// Full 2-shift with `r(a) = 1, r(b) = sqrt(2)/2` and an edge cocycle
/// (`aa -> +1, bb -> -1, ab, ba -> +1`) whose zero-displacement loop
/// lengths are rationally independent.
pub fn f2_irr_edge() -> FlowModel {
    let ts = TransitionStructure::full_shift(&["a", "b"]);
    let r = RealFn::from_fn(&ts, 1, |w| if w[0] == 0 { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 });
    let f = CocycleFn::from_fn(&ts, 2, 1, |w| vec![if w == [1, 1] { -1 } else { 1 }]);
    FlowModel::new(ts, r, None, f).expect("edge-cocycle model is valid")
}
