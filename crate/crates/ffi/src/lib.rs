//! C ABI over the `loco` library.
//!
//! Morphologies and CPG networks cross the boundary as opaque handles that
//! must be released with their `_free` function. Every fallible call
//! returns a [`LocoStatus`]; on failure a description is kept per thread
//! and can be copied out with [`loco_last_error_message`]. Output buffers
//! are caller-allocated and their length is always passed explicitly.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use loco::environment::surrogate_evaluate;
use loco::fitness::{evaluate_samples, Sample};
use loco::{
    build_network, parse_morphology, CpgNetwork, DirectionSpec, EvalConfig, FitnessBreakdown,
    FitnessParams, MorphologyTree, WeightVector,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    LengthMismatch = 4,
    BufferTooSmall = 5,
    NumericError = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// Parsed robot body.
pub struct LocoMorphology(MorphologyTree);

/// CPG controller network compiled from a morphology.
pub struct LocoNetwork(CpgNetwork);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocoEvalConfig {
    pub duration: f64,
    pub tick_rate: f64,
    pub sample_count: usize,
    pub k_v: f64,
    pub k_w: f64,
}

impl From<LocoEvalConfig> for EvalConfig {
    fn from(c: LocoEvalConfig) -> Self {
        EvalConfig {
            duration: c.duration,
            tick_rate: c.tick_rate,
            sample_count: c.sample_count,
            k_v: c.k_v,
            k_w: c.k_w,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocoFitnessParams {
    pub omega: f64,
    pub epsilon: f64,
}

/// Fitness breakdown; angles in radians, speed in metres per minute.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocoFitness {
    pub beta1: f64,
    pub delta: f64,
    pub distance_d: f64,
    pub penalty_p: f64,
    pub path_length_l: f64,
    pub fitness_naive: f64,
    pub fitness: f64,
    pub speed: f64,
}

impl From<FitnessBreakdown> for LocoFitness {
    fn from(b: FitnessBreakdown) -> Self {
        LocoFitness {
            beta1: b.beta1,
            delta: b.delta,
            distance_d: b.distance_d,
            penalty_p: b.penalty_p,
            path_length_l: b.path_length_l,
            fitness_naive: b.fitness_naive,
            fitness: b.fitness,
            speed: b.speed,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

type Failure = (LocoStatus, String);

fn fail<T>(status: LocoStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err((status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LocoStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (LocoStatus::Ok, String::new()),
        Ok(Err(e)) => e,
        Err(_) => (LocoStatus::Panic, "internal panic".into()),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(LocoStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return fail(LocoStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| (LocoStatus::NullPointer, format!("{what} is null")))
}

fn need(len: usize, required: usize, what: &str) -> Result<(), Failure> {
    if len < required {
        return fail(
            LocoStatus::BufferTooSmall,
            format!("{what} holds {len} values, {required} required"),
        );
    }
    Ok(())
}

/// Null-terminated library version. The pointer is static.
#[no_mangle]
pub extern "C" fn loco_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (truncated and
/// always null-terminated when `len > 0`). Returns the message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn loco_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

#[no_mangle]
pub extern "C" fn loco_eval_config_default() -> LocoEvalConfig {
    let c = EvalConfig::default();
    LocoEvalConfig {
        duration: c.duration,
        tick_rate: c.tick_rate,
        sample_count: c.sample_count,
        k_v: c.k_v,
        k_w: c.k_w,
    }
}

#[no_mangle]
pub extern "C" fn loco_fitness_params_default() -> LocoFitnessParams {
    let p = FitnessParams::default();
    LocoFitnessParams {
        omega: p.omega,
        epsilon: p.epsilon,
    }
}

/// Parse a morphology description. On success `*out` receives a handle
/// owned by the caller.
///
/// # Safety
/// `text` must be a null-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn loco_morphology_parse(
    text: *const c_char,
    out: *mut *mut LocoMorphology,
) -> LocoStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(LocoStatus::NullPointer, "text or out is null");
        }
        *out = ptr::null_mut();
        let s = CStr::from_ptr(text)
            .to_str()
            .or_else(|_| fail(LocoStatus::InvalidUtf8, "text is not UTF-8"))?;
        let tree = parse_morphology(s).or_else(|e| fail(LocoStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(LocoMorphology(tree)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`loco_morphology_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn loco_morphology_free(m: *mut LocoMorphology) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live morphology handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn loco_morphology_joint_count(
    m: *const LocoMorphology,
    out: *mut usize,
) -> LocoStatus {
    guard(|| {
        let m = deref(m, "morphology")?;
        if out.is_null() {
            return fail(LocoStatus::NullPointer, "out is null");
        }
        *out = m.0.joint_count();
        Ok(())
    })
}

/// Compile the CPG network of a morphology. On success `*out` receives a
/// handle owned by the caller.
///
/// # Safety
/// `m` must be a live morphology handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn loco_network_build(
    m: *const LocoMorphology,
    out: *mut *mut LocoNetwork,
) -> LocoStatus {
    guard(|| {
        let m = deref(m, "morphology")?;
        if out.is_null() {
            return fail(LocoStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let net = build_network(&m.0).or_else(|e| fail(LocoStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(LocoNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `n` must be null or a handle from [`loco_network_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn loco_network_free(n: *mut LocoNetwork) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

/// # Safety
/// `n` must be a live network handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn loco_network_parameter_count(
    n: *const LocoNetwork,
    out: *mut usize,
) -> LocoStatus {
    guard(|| {
        let n = deref(n, "network")?;
        if out.is_null() {
            return fail(LocoStatus::NullPointer, "out is null");
        }
        *out = n.0.parameter_count();
        Ok(())
    })
}

/// Write the 6-D coordinate of every weight, in canonical order, as
/// `parameter_count × 6` row-major doubles.
///
/// # Safety
/// `n` must be a live network handle; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn loco_network_weight_coordinates(
    n: *const LocoNetwork,
    out: *mut f64,
    len: usize,
) -> LocoStatus {
    guard(|| {
        let n = deref(n, "network")?;
        let coords = n.0.weight_coordinates();
        need(len, coords.len() * 6, "out")?;
        let out = slice_mut(out, len, "out")?;
        for (row, c) in out.chunks_exact_mut(6).zip(&coords) {
            row.copy_from_slice(&c.as_array());
        }
        Ok(())
    })
}

/// Reset the network, load `weights` and step it `ticks` times, writing
/// `ticks × joint_count` row-major outputs.
///
/// # Safety
/// `n` must be a live network handle not used concurrently; `weights` must
/// point to `n_weights` doubles and `outputs` to `outputs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn loco_network_run(
    n: *mut LocoNetwork,
    weights: *const f64,
    n_weights: usize,
    ticks: usize,
    outputs: *mut f64,
    outputs_len: usize,
) -> LocoStatus {
    guard(|| {
        let n = n
            .as_mut()
            .ok_or_else(|| (LocoStatus::NullPointer, "network is null".to_string()))?;
        let w = WeightVector(slice(weights, n_weights, "weights")?.to_vec());
        if w.len() != n.0.parameter_count() {
            return fail(
                LocoStatus::LengthMismatch,
                format!("{} weights, network has {}", w.len(), n.0.parameter_count()),
            );
        }
        let joints = n.0.oscillators().len();
        need(outputs_len, ticks * joints, "outputs")?;
        let rows =
            n.0.run(&w, ticks)
                .or_else(|e| fail(LocoStatus::NumericError, e.to_string()))?;
        let out = slice_mut(outputs, outputs_len, "outputs")?;
        for (dst, row) in out.chunks_exact_mut(joints.max(1)).zip(&rows) {
            dst[..row.len()].copy_from_slice(row);
        }
        Ok(())
    })
}

/// Evaluate `weights` in the planar surrogate environment and write the
/// sampled trajectory as `sample_count × 3` row-major `(t, x, y)` values.
/// `cfg` may be null for defaults.
///
/// # Safety
/// `n` must be a live network handle; `cfg` null or readable; `weights`
/// must point to `n_weights` doubles and `txy` to `txy_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn loco_surrogate_evaluate(
    n: *const LocoNetwork,
    weights: *const f64,
    n_weights: usize,
    cfg: *const LocoEvalConfig,
    txy: *mut f64,
    txy_len: usize,
) -> LocoStatus {
    guard(|| {
        let n = deref(n, "network")?;
        let cfg: EvalConfig = cfg
            .as_ref()
            .map_or_else(EvalConfig::default, |c| (*c).into());
        let w = WeightVector(slice(weights, n_weights, "weights")?.to_vec());
        if w.len() != n.0.parameter_count() {
            return fail(
                LocoStatus::LengthMismatch,
                format!("{} weights, network has {}", w.len(), n.0.parameter_count()),
            );
        }
        cfg.validate()
            .or_else(|e| fail(LocoStatus::InvalidArgument, e.to_string()))?;
        need(txy_len, cfg.sample_count * 3, "txy")?;
        let traj = surrogate_evaluate(&n.0, &w, &cfg)
            .or_else(|e| fail(LocoStatus::NumericError, e.to_string()))?;
        let out = slice_mut(txy, txy_len, "txy")?;
        for (row, s) in out.chunks_exact_mut(3).zip(traj.samples()) {
            row.copy_from_slice(&[s.t, s.x, s.y]);
        }
        Ok(())
    })
}

/// Score a trajectory of `n_samples` row-major `(t, x, y)` triples against
/// target direction `beta0` (radians). `params` may be null for defaults.
///
/// # Safety
/// `txy` must point to `3 × n_samples` doubles; `params` null or readable;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn loco_evaluate_fitness(
    txy: *const f64,
    n_samples: usize,
    initial_orientation: f64,
    beta0: f64,
    params: *const LocoFitnessParams,
    out: *mut LocoFitness,
) -> LocoStatus {
    guard(|| {
        if out.is_null() {
            return fail(LocoStatus::NullPointer, "out is null");
        }
        let data = slice(txy, n_samples * 3, "txy")?;
        let samples = data
            .chunks_exact(3)
            .map(|r| Sample::new(r[0], r[1], r[2]))
            .collect();
        let params = params
            .as_ref()
            .map_or_else(FitnessParams::default, |p| FitnessParams {
                omega: p.omega,
                epsilon: p.epsilon,
            });
        let b = evaluate_samples(
            samples,
            initial_orientation,
            DirectionSpec { beta0 },
            params,
        )
        .or_else(|e| fail(LocoStatus::InvalidArgument, e.to_string()))?;
        *out = b.into();
        Ok(())
    })
}
