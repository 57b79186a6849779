//! Fixtures shared by unit tests.

use crate::dissipation::{build_liouvillian, effective_drive, FourLevelModel, Liouvillian};
use crate::model::{diagonalize, SystemParams};
use crate::spectrum::{steady_state, SteadyState};

pub(crate) struct Driven {
    pub model: FourLevelModel,
    pub l: Liouvillian,
    pub ss: SteadyState,
}

pub(crate) fn driven(p: &SystemParams) -> Driven {
    let d = diagonalize(p).unwrap();
    let model = effective_drive(&d, p, 3).unwrap();
    let l = build_liouvillian(&model).unwrap();
    let ss = steady_state(&l).unwrap();
    Driven { model, l, ss }
}
