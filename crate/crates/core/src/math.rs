//! Elementary functions. With the `std` feature these use the platform
//! library, which is closer to correctly rounded than the portable fallback.

#[cfg(feature = "std")]
mod imp {
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }

    pub fn expm1(x: f64) -> f64 {
        x.exp_m1()
    }

    pub fn log(x: f64) -> f64 {
        x.ln()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }

    pub fn expm1(x: f64) -> f64 {
        libm::expm1(x)
    }

    pub fn log(x: f64) -> f64 {
        libm::log(x)
    }
}

pub(crate) use imp::{exp, expm1, log};
