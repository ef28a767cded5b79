use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{Trajectory, TrajectoryKind};
use crate::numeric::gauss16_unit;

use super::{CyclicSystem, Nonlinearity};

/// Coefficients of `Delta_i' = a_i Delta_{i-1} + c_i Delta_i + b_i Delta_{i+1}`
/// (for the last component `Delta_{i+1}` is `Delta_0(t - tau)`; `a_0 = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientTriple {
    pub a: f64,
    pub c: f64,
    pub b: f64,
}

fn averaged_slope(g: &Nonlinearity, from: f64, to: f64) -> f64 {
    let d = to - from;
    gauss16_unit().iter().map(|&(s, w)| w * g.derivative(from + s * d)).sum()
}

/// Averaged partial derivatives along the segment between two points; `x` and
/// `y` are the instantaneous values, `x_del` and `y_del` the delayed values of `x_0`.
pub fn difference_coefficients_at(
    system: &CyclicSystem,
    x: &[f64],
    x_del: f64,
    y: &[f64],
    y_del: f64,
) -> Vec<CoefficientTriple> {
    let n = system.n();
    system
        .components
        .iter()
        .enumerate()
        .map(|(i, comp)| {
            let a = comp.prev.map_or(0.0, |p| averaged_slope(&p, x[i - 1], y[i - 1]));
            let (nx, ny) = if i == n { (x_del, y_del) } else { (x[i + 1], y[i + 1]) };
            CoefficientTriple { a, c: -comp.decay, b: averaged_slope(&comp.next, nx, ny) }
        })
        .collect()
}

/// Coefficients of the linear system solved by `y - x` at time `t`.
pub fn difference_coefficients(
    x: &Trajectory,
    y: &Trajectory,
    system: &CyclicSystem,
    t: f64,
) -> Result<Vec<CoefficientTriple>> {
    for tr in [x, y] {
        if *tr.kind() != TrajectoryKind::Cyclic || tr.dim() != system.dim() {
            return Err(Error::Argument("trajectory does not belong to this system".into()));
        }
    }
    let px = x.point(t)?;
    let py = y.point(t)?;
    let xd = x.value(t - system.tau, 0)?;
    let yd = y.value(t - system.tau, 0)?;
    Ok(difference_coefficients_at(system, &px, xd, &py, yd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Component, UnidirectionalSystem};

    fn bidirectional() -> CyclicSystem {
        CyclicSystem::new(
            vec![
                Component { decay: 1.0, prev: None, next: Nonlinearity::tanh(2.0) },
                Component { decay: 0.5, prev: Some(Nonlinearity::tanh(0.3)), next: Nonlinearity::tanh_with_slope(1.0, 2.0) },
                Component { decay: 2.0, prev: Some(Nonlinearity::linear(0.7)), next: Nonlinearity::tanh(-3.0) },
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn equal_points_give_partial_derivatives() {
        let sys = bidirectional();
        let x = [0.3, -1.2, 0.8];
        let co = difference_coefficients_at(&sys, &x, 0.4, &x, 0.4);
        assert!((co[0].b - sys.components[0].next.derivative(-1.2)).abs() < 1e-14);
        assert!((co[1].a - sys.components[1].prev.unwrap().derivative(0.3)).abs() < 1e-14);
        assert!((co[1].b - sys.components[1].next.derivative(0.8)).abs() < 1e-14);
        assert!((co[2].b - sys.components[2].next.derivative(0.4)).abs() < 1e-14);
        assert!((co[2].a - 0.7).abs() < 1e-14);
        assert_eq!(co[2].c, -2.0);
    }

    #[test]
    fn quadrature_equals_secant_slope() {
        let sys = bidirectional();
        let x = [0.3, -1.2, 0.8];
        let y = [-0.5, 0.9, 2.0];
        let co = difference_coefficients_at(&sys, &x, 0.4, &y, -1.1);
        let g = sys.components[2].next;
        let secant = (g.value(-1.1) - g.value(0.4)) / (-1.1 - 0.4);
        assert!((co[2].b - secant).abs() < 1e-12);
        let g = sys.components[0].next;
        assert!((co[0].b - (g.value(0.9) - g.value(-1.2)) / 2.1).abs() < 1e-12);
    }

    #[test]
    fn linear_system_has_constant_coefficients() {
        let sys = UnidirectionalSystem::new(
            vec![1.0, 3.0],
            vec![Nonlinearity::linear(2.0), Nonlinearity::linear(-5.0)],
            1.0,
        )
        .unwrap()
        .to_cyclic();
        let co = difference_coefficients_at(&sys, &[1.0, 2.0], 3.0, &[-4.0, 7.0], 0.5);
        for (x, y) in co.iter().zip(sys.linearization()) {
            assert!((x.a - y.a).abs() < 1e-14 && x.c == y.c && (x.b - y.b).abs() < 1e-14);
        }
    }
}
