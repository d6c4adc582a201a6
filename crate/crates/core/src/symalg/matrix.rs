use std::collections::BTreeMap;

use super::poly::{coeff_to_c64, NCPoly};
use super::{Symbol, HBAR};
use crate::opcore::{ComplexMatrix, HermitianOperator};
use crate::{Error, Result};

/// Evaluates an operator polynomial numerically: each word becomes the
/// ordered product of the bound matrices. Scalar symbols take values from
/// `scalars`; `hbar` defaults to 1 when not given.
pub fn nc_to_matrix(
    p: &NCPoly,
    bindings: &BTreeMap<Symbol, HermitianOperator>,
    scalars: &BTreeMap<Symbol, f64>,
) -> Result<ComplexMatrix> {
    let dim = bindings
        .values()
        .next()
        .map(|a| a.dim())
        .ok_or_else(|| Error::InvalidParameter("no operator bindings".into()))?;
    for a in bindings.values() {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
        }
    }
    let mut values = scalars.clone();
    values.entry(Symbol::from(HBAR)).or_insert(1.0);
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (k, c) in p.terms() {
        let mut m = ComplexMatrix::identity(dim, dim);
        for s in &k.word {
            let a = bindings.get(s).ok_or_else(|| Error::UnknownSymbol(s.to_string()))?;
            m *= a.matrix();
        }
        out += m * (coeff_to_c64(c) * k.scalars.eval(&values)?);
    }
    Ok(out)
}
