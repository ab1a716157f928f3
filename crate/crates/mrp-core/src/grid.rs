//! Uniform-grid function carrier for numeric curves (convolution powers,
//! renewal functions, density estimates).

use std::io::Write;

use crate::error::{Error, Result};

/// Specification of a uniform grid 0..t_max with step dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dt: f64,
    pub t_max: f64,
}

impl GridSpec {
    pub fn new(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
        }
        if !(t_max > dt) {
            return Err(Error::validation("t_max", format!("must exceed dt, got {t_max}")));
        }
        Ok(GridSpec { dt, t_max })
    }

    pub fn len(&self) -> usize {
        (self.t_max / self.dt).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Function values on a uniform grid t_i = i * dt, i = 0..n-1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("values", "non-finite value on grid"));
        }
        Ok(GridFunction { dt, values })
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t((self.values.len().max(1)) - 1)
    }

    /// Linear interpolation, clamped at the ends.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        let g = t / self.dt;
        let i = g.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let w = g - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Two-column CSV `t,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.t(i), v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_roundtrip() {
        let g = GridFunction::new(0.5, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(g.t(2), 1.0);
        assert_eq!(g.eval(0.25), 0.5);
        assert_eq!(g.eval(10.0), 4.0);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,value\n0,0\n"));
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(GridFunction::new(0.0, vec![1.0]).is_err());
        assert!(GridFunction::new(1.0, vec![f64::NAN]).is_err());
        assert!(GridSpec::new(-1.0, 2.0).is_err());
    }
}
