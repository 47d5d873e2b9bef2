//! Cubic merge-trajectory algebra.
//!
//! The CAV's unconstrained minimum-effort trajectory between its current
//! state and a merge point is a cubic in time,
//! p(t) = a t^3 + b t^2 + c t + d, planned in a shifted frame where the
//! planning instant is t = 0 and p(0) = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient vector (a, b, c, d) of one planned cubic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Exact speed and acceleration ranges of a cubic over [0, T].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub v_lo: f64,
    pub v_hi: f64,
    pub u_lo: f64,
    pub u_hi: f64,
}

/// Position, speed, and acceleration of the cubic at time t.
pub fn eval_trajectory(psi: &CubicCoeffs, t: f64) -> (f64, f64, f64) {
    let CubicCoeffs { a, b, c, d } = *psi;
    let p = ((a * t + b) * t + c) * t + d;
    let v = (3.0 * a * t + 2.0 * b) * t + c;
    let u = 6.0 * a * t + 2.0 * b;
    (p, v, u)
}

/// Coefficients of the cubic meeting the merge boundary conditions
/// p(0)=0, v(0)=v0, p(T_m)=p_m, v(T_m)=v_m.
///
/// d=0 and c=v0 are immediate; (a, b) solve the remaining 2x2 linear system
///   a T^3 + b T^2 = p_m - v0 T
///   3 a T^2 + 2 b T = v_m - v0.
pub fn solve_boundary_coeffs(
    v0: f64,
    p_m: f64,
    v_m: f64,
    t_m: f64,
    dt: f64,
) -> Result<CubicCoeffs> {
    if !(t_m >= dt) {
        return Err(Error::DegenerateHorizon { t_m, dt });
    }
    let rhs_p = p_m - v0 * t_m;
    let rhs_v = v_m - v0;
    let t2 = t_m * t_m;
    let t3 = t2 * t_m;
    let a = (rhs_v * t_m - 2.0 * rhs_p) / t3;
    let b = (3.0 * rhs_p - rhs_v * t_m) / t2;
    Ok(CubicCoeffs {
        a,
        b,
        c: v0,
        d: 0.0,
    })
}

/// Exact extrema of speed and acceleration over [0, T_m].
///
/// Speed is quadratic: candidates are the endpoints plus the interior vertex
/// t = -b/(3a) when a != 0 and the vertex lies inside. Acceleration is
/// affine: endpoints only.
pub fn trajectory_extremes(psi: &CubicCoeffs, t_m: f64) -> Extremes {
    let speed = |t: f64| (3.0 * psi.a * t + 2.0 * psi.b) * t + psi.c;
    let mut v_lo = speed(0.0).min(speed(t_m));
    let mut v_hi = speed(0.0).max(speed(t_m));
    if psi.a != 0.0 {
        let vertex = -psi.b / (3.0 * psi.a);
        if vertex > 0.0 && vertex < t_m {
            let v = speed(vertex);
            v_lo = v_lo.min(v);
            v_hi = v_hi.max(v);
        }
    }
    let u0 = 2.0 * psi.b;
    let u1 = 6.0 * psi.a * t_m + 2.0 * psi.b;
    Extremes {
        v_lo,
        v_hi,
        u_lo: u0.min(u1),
        u_hi: u0.max(u1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_zero_polynomial() {
        let psi = CubicCoeffs {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        };
        assert_eq!(eval_trajectory(&psi, 5.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn eval_constant_speed() {
        let psi = CubicCoeffs {
            a: 0.0,
            b: 0.0,
            c: 10.0,
            d: 0.0,
        };
        assert_eq!(eval_trajectory(&psi, 3.0), (30.0, 10.0, 0.0));
    }

    #[test]
    fn eval_hand_computed_quadratic() {
        let psi = CubicCoeffs {
            a: 0.0,
            b: 0.2,
            c: 10.0,
            d: 0.0,
        };
        let (p, v, u) = eval_trajectory(&psi, 10.0);
        assert_abs_diff_eq!(p, 120.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn solve_constant_speed_cases() {
        let psi = solve_boundary_coeffs(10.0, 100.0, 10.0, 10.0, 0.1).unwrap();
        assert_abs_diff_eq!(psi.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.b, 0.0, epsilon = 1e-12);
        assert_eq!((psi.c, psi.d), (10.0, 0.0));

        let psi = solve_boundary_coeffs(20.0, 100.0, 20.0, 5.0, 0.1).unwrap();
        assert_abs_diff_eq!(psi.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.b, 0.0, epsilon = 1e-12);
        assert_eq!((psi.c, psi.d), (20.0, 0.0));
    }

    #[test]
    fn solve_accelerating_case() {
        // Verified by substitution: a=0, b=0.2 gives p(10)=120, v(10)=14.
        let psi = solve_boundary_coeffs(10.0, 120.0, 14.0, 10.0, 0.1).unwrap();
        assert_abs_diff_eq!(psi.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.b, 0.2, epsilon = 1e-12);
        assert_eq!((psi.c, psi.d), (10.0, 0.0));
    }

    #[test]
    fn solve_rejects_sub_step_horizon() {
        assert!(matches!(
            solve_boundary_coeffs(10.0, 5.0, 10.0, 0.05, 0.1),
            Err(Error::DegenerateHorizon { .. })
        ));
    }

    #[test]
    fn boundary_roundtrip_randomized() {
        // eval(solve(...)) must reproduce all four boundary conditions.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let v0 = 5.0 + 30.0 * next();
            let v_m = 5.0 + 30.0 * next();
            let t_m = 1.0 + 19.0 * next();
            let p_m = 20.0 + 400.0 * next();
            let psi = solve_boundary_coeffs(v0, p_m, v_m, t_m, 0.1).unwrap();
            let (p0, vel0, _) = eval_trajectory(&psi, 0.0);
            let (p1, vel1, _) = eval_trajectory(&psi, t_m);
            assert_abs_diff_eq!(p0, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(vel0, v0, epsilon = 1e-9 * v0.abs().max(1.0));
            assert_abs_diff_eq!(p1, p_m, epsilon = 1e-9 * p_m.abs().max(1.0));
            assert_abs_diff_eq!(vel1, v_m, epsilon = 1e-9 * v_m.abs().max(1.0));
        }
    }

    #[test]
    fn extremes_quadratic_speed() {
        let psi = CubicCoeffs {
            a: 0.0,
            b: 0.2,
            c: 10.0,
            d: 0.0,
        };
        let e = trajectory_extremes(&psi, 10.0);
        assert_abs_diff_eq!(e.v_lo, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.v_hi, 14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.u_lo, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(e.u_hi, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn extremes_constant_speed() {
        let psi = CubicCoeffs {
            a: 0.0,
            b: 0.0,
            c: 15.0,
            d: 0.0,
        };
        let e = trajectory_extremes(&psi, 8.0);
        assert_eq!((e.v_lo, e.v_hi, e.u_lo, e.u_hi), (15.0, 15.0, 0.0, 0.0));
    }

    #[test]
    fn extremes_interior_vertex() {
        // v(t) = 3t^2 - 30t + 50 has its vertex at t=5: v(5) = -25.
        let psi = CubicCoeffs {
            a: 1.0,
            b: -15.0,
            c: 50.0,
            d: 0.0,
        };
        let e = trajectory_extremes(&psi, 10.0);
        assert_abs_diff_eq!(e.v_lo, -25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.v_hi, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.u_lo, -30.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.u_hi, 30.0, epsilon = 1e-12);
    }
}
