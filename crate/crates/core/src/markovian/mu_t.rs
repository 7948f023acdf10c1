//! Per-target coupling from `(U, V) = (0, 1)`.
//!
//! For a target time `t`, reflect until `U` reaches `-4/t` or `V` returns to
//! 0 (time `T'_1`), then run synchronously until `V = 0` (time `S_1`), then
//! continue with the half-cycle coupling started from `(U_{S_1}, 0)`.

use crate::error::{require_positive, Result};
use crate::markovian::bck::{run_half_cycles, BckSettings, CouplingOutcome, ReflectEnd, Walker};
use crate::noise::GaussianSource;

#[derive(Debug, Clone, PartialEq)]
pub struct MuTOutcome {
    pub outcome: CouplingOutcome,
    /// `T'_1`, or the censoring time if stage 1 never ended.
    pub stage1_end: f64,
    /// `V` at `T'_1` (zero when stage 1 ended with `V = 0`).
    pub v_at_stage1_end: f64,
    /// `S_1`, the start of the half-cycle stage, if reached.
    pub s1: Option<f64>,
    pub u_at_s1: Option<f64>,
}

/// Runs the three stages, censored at `2 * target_t`.
pub fn simulate_mu_t<G: GaussianSource>(
    target_t: f64,
    dt0: f64,
    stream: &mut G,
) -> Result<MuTOutcome> {
    require_positive("target_t", target_t)?;
    let settings = BckSettings::new(dt0, 2.0 * target_t)?;
    let t_max = settings.t_max;
    let thr = -4.0 / target_t;
    let mut w = Walker { t: 0.0, u: 0.0, v: 1.0 };
    // spatial scale of stage 1 is the threshold distance
    let end = w.reflect(1.0, Some(thr), thr.abs(), dt0, t_max, stream);
    let stage1_end = w.t;
    let (s1, v_at) = match end {
        ReflectEnd::Censored => {
            return Ok(MuTOutcome {
                outcome: CouplingOutcome::censored_at(t_max),
                stage1_end,
                v_at_stage1_end: w.v,
                s1: None,
                u_at_s1: None,
            })
        }
        ReflectEnd::VZero => (w.t, 0.0),
        ReflectEnd::Threshold { v } => (w.t + v / thr.abs(), v),
    };
    if s1 > t_max {
        return Ok(MuTOutcome {
            outcome: CouplingOutcome::censored_at(t_max),
            stage1_end,
            v_at_stage1_end: v_at,
            s1: None,
            u_at_s1: None,
        });
    }
    let u = w.u;
    let mut outcome = if u == 0.0 {
        CouplingOutcome::coupled_at(s1)
    } else {
        run_half_cycles(u, s1, &settings, stream, None)
    };
    outcome.half_cycle_times.insert(0, s1);
    Ok(MuTOutcome {
        outcome,
        stage1_end,
        v_at_stage1_end: v_at,
        s1: Some(s1),
        u_at_s1: Some(u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::derive_stream;

    #[test]
    fn stages_are_consistent() {
        for rep in 0..200 {
            let r = simulate_mu_t(10.0, 1e-2, &mut derive_stream(1, rep)).unwrap();
            assert!(r.v_at_stage1_end >= 0.0);
            if let (Some(s1), Some(u)) = (r.s1, r.u_at_s1) {
                assert!(s1 >= r.stage1_end);
                assert!((-0.4 - 1e-15..=0.0).contains(&u));
                assert_eq!(r.outcome.half_cycle_times[0], s1);
            }
            if r.outcome.coupled {
                assert!(r.outcome.tau <= 20.0);
            } else {
                assert_eq!(r.outcome.tau, 20.0);
            }
        }
    }

    #[test]
    fn rejects_bad_target() {
        let mut s = derive_stream(1, 0);
        assert!(simulate_mu_t(0.0, 1e-2, &mut s).is_err());
    }
}
