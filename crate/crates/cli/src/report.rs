//! The violation report wire format.

use chanlab_core::entropy::RenyiOrder;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// One supermultiplicativity experiment, as written to `--out` JSON.
///
/// `gap = hmin_hat_n + hmin_hat_nbar - h_product_phi`; a positive gap means
/// the product channel's evaluated output entropy sits below the sum of the
/// single-copy estimates. `bound_check` is the deterministic ceiling on
/// `h_product_phi` implied by the guaranteed large eigenvalue.
#[derive(Debug, Clone)]
pub struct ViolationReport {
    pub p: RenyiOrder,
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_s: usize,
    pub hmin_hat_n: f64,
    pub hmin_hat_nbar: f64,
    pub h_product_phi: f64,
    pub gap: f64,
    pub bound_check: f64,
    pub seed: u64,
}

impl Serialize for ViolationReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ViolationReport", 10)?;
        // Infinity has no JSON number; it travels as the string "inf".
        match self.p {
            RenyiOrder::Infinity => s.serialize_field("p", "inf")?,
            other => s.serialize_field("p", &other.value())?,
        }
        s.serialize_field("dim_a", &self.dim_a)?;
        s.serialize_field("dim_b", &self.dim_b)?;
        s.serialize_field("dim_s", &self.dim_s)?;
        s.serialize_field("hmin_hat_n", &self.hmin_hat_n)?;
        s.serialize_field("hmin_hat_nbar", &self.hmin_hat_nbar)?;
        s.serialize_field("h_product_phi", &self.h_product_phi)?;
        s.serialize_field("gap", &self.gap)?;
        s.serialize_field("bound_check", &self.bound_check)?;
        s.serialize_field("seed", &self.seed)?;
        s.end()
    }
}
