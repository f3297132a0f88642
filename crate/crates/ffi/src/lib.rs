//! C interface to `gridtensor`.
//!
//! Every fallible function returns a [`GtStatus`]; on failure the message is
//! available from [`gt_last_error`] on the same thread. Objects are opaque
//! handles released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gridtensor::grid::Grid3;
use gridtensor::hf::io::{parse_basis, parse_geometry, place_basis};
use gridtensor::hf::{scf_solve, BasisSet, Molecule, ScfConfig, ScfState};
use gridtensor::kernel::{KernelKind, KernelTensor};
use gridtensor::lattice::{direct_energy_oracle, lattice_energy, LatticeSpec};
use gridtensor::mp2::{mo_transform_cholesky, mp2_energy, MoSpace, Mp2Mode, DEFAULT_EXPSUM_EPS};
use gridtensor::qtt::tt_decompose;
use gridtensor::tensor::{self, CanonicalTensor3};
use gridtensor::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfDomain = 2,
    SnapFailure = 3,
    SizeGuard = 4,
    DivisionGuard = 5,
    Numerical = 6,
    Unattainable = 7,
    PairGuard = 8,
    Parse = 9,
    NullPointer = 10,
    NotConverged = 11,
    Panic = 12,
}

impl From<&Error> for GtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => GtStatus::InvalidArgument,
            Error::OutOfDomain(_) => GtStatus::OutOfDomain,
            Error::SnapFailure { .. } => GtStatus::SnapFailure,
            Error::SizeGuard { .. } => GtStatus::SizeGuard,
            Error::DivisionGuard(_) => GtStatus::DivisionGuard,
            Error::Numerical(_) => GtStatus::Numerical,
            Error::Unattainable { .. } => GtStatus::Unattainable,
            Error::PairGuard { .. } => GtStatus::PairGuard,
            Error::Parse { .. } => GtStatus::Parse,
        }
    }
}

/// Low-rank Newton kernel on a cubic grid.
pub struct GtKernel(KernelTensor);

/// Three-dimensional tensor in canonical (CP) format.
pub struct GtCanonical(CanonicalTensor3);

/// Converged (or not) restricted Hartree-Fock state.
pub struct GtScf {
    state: ScfState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(GtStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GtStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GtStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GtStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(GtStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn gt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Newton kernel on the `n`-point grid of half-width `half_width` with
/// relative accuracy `eps`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_kernel_new(
    n: usize,
    half_width: f64,
    eps: f64,
    out: *mut *mut GtKernel,
) -> GtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = Grid3::cubic(half_width, n)?;
        let k = KernelTensor::for_grid(&grid, KernelKind::Newton, eps, false)?;
        out.write(Box::into_raw(Box::new(GtKernel(k))));
        Ok(())
    })
}

/// # Safety
/// `k` must come from [`gt_kernel_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gt_kernel_free(k: *mut GtKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// # Safety
/// `k` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_kernel_rank(k: *const GtKernel, out: *mut usize) -> GtStatus {
    guard(|| {
        let k = k.as_ref().ok_or_else(|| null("kernel"))?;
        write(out, k.0.rank(), "out")
    })
}

/// Cell average of `1/r` represented at node `(i, j, l)`.
///
/// # Safety
/// `k` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_kernel_value(
    k: *const GtKernel,
    i: usize,
    j: usize,
    l: usize,
    out: *mut f64,
) -> GtStatus {
    guard(|| {
        let k = k.as_ref().ok_or_else(|| null("kernel"))?;
        let n = k.0.grid.extents();
        if i >= n[0] || j >= n[1] || l >= n[2] {
            return Err(Failure(
                GtStatus::OutOfDomain,
                format!("index ({i}, {j}, {l}) outside {n:?}"),
            ));
        }
        write(out, k.0.cell_average([i, j, l]), "out")
    })
}

/// Canonical tensor from `rank` weights and three column-major factor
/// arrays of `dims[l] * rank` entries each.
///
/// # Safety
/// `dims` must point to 3 values, `weights` to `rank`, each factor to
/// `dims[l] * rank`, and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_canonical_new(
    dims: *const usize,
    rank: usize,
    weights: *const f64,
    f0: *const f64,
    f1: *const f64,
    f2: *const f64,
    out: *mut *mut GtCanonical,
) -> GtStatus {
    guard(|| {
        if dims.is_null() {
            return Err(null("dims"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let d = [*dims, *dims.add(1), *dims.add(2)];
        let w = slice(weights, rank, "weights")?;
        let f = [
            slice(f0, d[0] * rank, "f0")?,
            slice(f1, d[1] * rank, "f1")?,
            slice(f2, d[2] * rank, "f2")?,
        ];
        let terms: Vec<(f64, [Vec<f64>; 3])> = (0..rank)
            .map(|k| {
                (
                    w[k],
                    [0, 1, 2].map(|l| f[l][k * d[l]..(k + 1) * d[l]].to_vec()),
                )
            })
            .collect();
        let t = CanonicalTensor3::from_terms(d, &terms)?;
        out.write(Box::into_raw(Box::new(GtCanonical(t))));
        Ok(())
    })
}

/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gt_canonical_free(t: *mut GtCanonical) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_canonical_rank(t: *const GtCanonical, out: *mut usize) -> GtStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tensor"))?;
        write(out, t.0.rank(), "out")
    })
}

/// # Safety
/// `t` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_canonical_get(
    t: *const GtCanonical,
    i: usize,
    j: usize,
    k: usize,
    out: *mut f64,
) -> GtStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tensor"))?;
        let d = t.0.dims();
        if i >= d[0] || j >= d[1] || k >= d[2] {
            return Err(Failure(
                GtStatus::OutOfDomain,
                format!("index ({i}, {j}, {k}) outside {d:?}"),
            ));
        }
        write(out, t.0.get(i, j, k), "out")
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtBinaryOp {
    Add = 0,
    Hadamard = 1,
    /// Uses the mesh size `h`.
    Convolve = 2,
}

/// Result of `op(a, b)` as a new handle.
///
/// # Safety
/// `a`, `b` must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_canonical_binary(
    op: GtBinaryOp,
    a: *const GtCanonical,
    b: *const GtCanonical,
    h: f64,
    out: *mut *mut GtCanonical,
) -> GtStatus {
    guard(|| {
        let (a, b) = (
            a.as_ref().ok_or_else(|| null("a"))?,
            b.as_ref().ok_or_else(|| null("b"))?,
        );
        if out.is_null() {
            return Err(null("out"));
        }
        let t = match op {
            GtBinaryOp::Add => tensor::add(&a.0, &b.0)?,
            GtBinaryOp::Hadamard => tensor::hadamard(&a.0, &b.0)?,
            GtBinaryOp::Convolve => tensor::convolve(&a.0, &b.0, h)?,
        };
        out.write(Box::into_raw(Box::new(GtCanonical(t))));
        Ok(())
    })
}

/// # Safety
/// `a`, `b` must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_canonical_dot(
    a: *const GtCanonical,
    b: *const GtCanonical,
    out: *mut f64,
) -> GtStatus {
    guard(|| {
        let (a, b) = (
            a.as_ref().ok_or_else(|| null("a"))?,
            b.as_ref().ok_or_else(|| null("b"))?,
        );
        write(out, tensor::scalar_product(&a.0, &b.0)?, "out")
    })
}

/// Interaction energy of an `counts[0] x counts[1] x counts[2]` lattice of
/// charges `z` at the given spacing; `oracle != 0` selects the direct sum.
///
/// # Safety
/// `counts` must point to 3 values and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_lattice_energy(
    counts: *const usize,
    spacing: f64,
    z: f64,
    n0: usize,
    eps: f64,
    oracle: i32,
    out: *mut f64,
) -> GtStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null("counts"));
        }
        let spec = LatticeSpec::new([*counts, *counts.add(1), *counts.add(2)], spacing, z, n0)?;
        let e = if oracle != 0 {
            direct_energy_oracle(&spec)?
        } else {
            lattice_energy(&spec, eps)?
        };
        write(out, e, "out")
    })
}

/// Largest QTT rank of a length-`2^L` vector at relative accuracy `eps`.
///
/// # Safety
/// `x` must point to `len` values and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_qtt_max_rank(
    x: *const f64,
    len: usize,
    eps: f64,
    out: *mut usize,
) -> GtStatus {
    guard(|| {
        let img = tt_decompose(slice(x, len, "x")?, eps)?;
        write(out, img.max_rank(), "out")
    })
}

/// Restricted Hartree-Fock from geometry and basis text in the CLI file
/// formats, on the `n`-point cubic grid of half-width `half_width`.
/// A run that does not converge still yields a handle and returns
/// `NotConverged`.
///
/// # Safety
/// Strings must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_scf_run(
    geometry: *const c_char,
    basis: *const c_char,
    n: usize,
    half_width: f64,
    max_iter: usize,
    out: *mut *mut GtScf,
) -> GtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let nuclei = parse_geometry(text(geometry, "geometry")?)?;
        let shells = parse_basis(text(basis, "basis")?)?;
        let placed = place_basis(&nuclei, &shells)?;
        let mol = Molecule::neutral(nuclei)?;
        let bs = BasisSet::from_shells(&placed, Grid3::cubic(half_width, n)?)?;
        let mut cfg = ScfConfig::default();
        if max_iter > 0 {
            cfg.max_iter = max_iter;
        }
        let state = scf_solve(&mol, &bs, &cfg)?;
        let (converged, iters) = (state.converged, state.iterations());
        out.write(Box::into_raw(Box::new(GtScf { state })));
        if converged {
            Ok(())
        } else {
            Err(Failure(
                GtStatus::NotConverged,
                format!("SCF did not converge in {iters} iterations"),
            ))
        }
    })
}

/// # Safety
/// `s` must come from [`gt_scf_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gt_scf_free(s: *mut GtScf) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Total energy including nuclear repulsion.
///
/// # Safety
/// `s` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_scf_energy(s: *const GtScf, out: *mut f64) -> GtStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scf"))?;
        write(out, s.state.energy, "out")
    })
}

/// # Safety
/// `s` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_scf_iterations(s: *const GtScf, out: *mut usize) -> GtStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scf"))?;
        write(out, s.state.iterations(), "out")
    })
}

/// MP2 correlation energy of the SCF state.
///
/// # Safety
/// `s` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gt_scf_mp2(s: *const GtScf, out: *mut f64) -> GtStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("scf"))?.state;
        let chol = s.tei.as_ref().ok_or_else(|| {
            Failure(
                GtStatus::InvalidArgument,
                "state carries no TEI factors".into(),
            )
        })?;
        let mos = MoSpace::new(s.orbital_energies.clone(), s.n_orb, s.c.clone())?;
        let mo = mo_transform_cholesky(chol, &mos)?;
        write(
            out,
            mp2_energy(
                &mo,
                &mos,
                Mp2Mode::Factorized {
                    eps: DEFAULT_EXPSUM_EPS,
                },
            )?,
            "out",
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_recorded_per_thread() {
        let mut out = 0.0;
        let status =
            unsafe { gt_lattice_energy([2usize, 1, 1].as_ptr(), 2.0, 1.0, 7, 1e-8, 0, &mut out) };
        assert_eq!(status, GtStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(gt_last_error()) }
            .to_str()
            .unwrap()
            .to_owned();
        assert!(msg.contains("even"), "{msg}");
        std::thread::spawn(|| assert!(gt_last_error().is_null()))
            .join()
            .unwrap();
        let ok =
            unsafe { gt_lattice_energy([2usize, 1, 1].as_ptr(), 2.0, 1.0, 8, 1e-8, 1, &mut out) };
        assert_eq!(ok, GtStatus::Ok);
        assert!(gt_last_error().is_null());
        assert_eq!(out, 0.5);
    }

    #[test]
    fn null_pointers_rejected() {
        assert_eq!(
            unsafe { gt_kernel_rank(ptr::null(), ptr::null_mut()) },
            GtStatus::NullPointer
        );
        assert_eq!(
            unsafe { gt_kernel_new(9, 2.0, 1e-4, ptr::null_mut()) },
            GtStatus::NullPointer
        );
        unsafe { gt_kernel_free(ptr::null_mut()) };
    }

    #[test]
    fn version_string() {
        let v = unsafe { CStr::from_ptr(gt_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
