use az_renyi::divergence::{d_from_q, q_alpha_z};
use az_renyi::{AlphaZ, CMatrix, PositiveOperator};

fn main() -> az_renyi::Result<()> {
    let psi = PositiveOperator::from_hermitian(CMatrix::from_row_slice(
        2,
        2,
        &[0.7.into(), 0.0.into(), 0.0.into(), 0.3.into()],
    ))?;
    let phi = PositiveOperator::from_hermitian(CMatrix::from_row_slice(
        2,
        2,
        &[0.4.into(), 0.0.into(), 0.0.into(), 0.6.into()],
    ))?;

    let par = AlphaZ::new(0.5, 1.0)?;
    let q = q_alpha_z(&psi, &phi, &par)?;
    let d = d_from_q(q, psi.trace(), par.alpha())?;
    println!("D = {d}");
    Ok(())
}
