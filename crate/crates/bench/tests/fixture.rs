use wgmorley::system::{apply_bc, solve_full, solve_schur};
use wgmorley::MeshFamily;
use wgmorley_bench::Fixture;

#[test]
fn fixtures_assemble_and_solve() {
    for family in [
        MeshFamily::Square,
        MeshFamily::Triangle,
        MeshFamily::Polygon,
        MeshFamily::Cube,
    ] {
        let fx = Fixture::new(family, 3, 2);
        let asm = fx.assemble();
        assert_eq!(asm.cells.len(), fx.mesh.cells.len());
        let fixed = fx.boundary();
        let (full, _) = solve_full(&apply_bc(&asm, &fixed).unwrap(), 1e-12).unwrap();
        let (schur, _) = solve_schur(&asm, &fixed, 1e-12).unwrap();
        let scale = full.coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = full
            .coeffs
            .iter()
            .zip(&schur.coeffs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 1e-10 * scale, "{family:?}: {diff:e}");
    }
}
