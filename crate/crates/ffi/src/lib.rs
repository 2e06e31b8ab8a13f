//! C ABI over `irisct`.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free`. Every fallible call returns an [`IrisStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`iris_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use irisct::classify::template_distance;
use irisct::config::RunConfig;
use irisct::dataio::{load_image, GrayImage};
use irisct::features::{Extractor, FeatureVector, Method, Payload, ProjectionKind};
use irisct::pipeline::image_to_strip;
use irisct::store::{basis_from_records, read_store, TemplateRecord};
use irisct::IrisError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    FileNotFound = 3,
    Io = 4,
    UnsupportedFormat = 5,
    CorruptImage = 6,
    Segmentation = 7,
    DimMismatch = 8,
    EmptyMask = 9,
    Parse = 10,
    BufferTooSmall = 11,
    Panic = 12,
    Other = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrisPayloadKind {
    Reals = 0,
    Bits = 1,
    Trits = 2,
    TritsReals = 3,
}

/// Configuration plus fitted projection bases.
pub struct IrisCtx {
    config: RunConfig,
    extractor: Extractor,
}

pub struct IrisImage {
    inner: GrayImage,
}

pub struct IrisTemplate {
    inner: FeatureVector,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &IrisError) -> IrisStatus {
    match e {
        IrisError::FileNotFound(_) => IrisStatus::FileNotFound,
        IrisError::Io(_) => IrisStatus::Io,
        IrisError::UnsupportedFormat(_) => IrisStatus::UnsupportedFormat,
        IrisError::CorruptImage(_) => IrisStatus::CorruptImage,
        IrisError::NoBoundaryFound(_)
        | IrisError::DegenerateGeometry(_)
        | IrisError::TooSmall(_) => IrisStatus::Segmentation,
        IrisError::DimMismatch(_) => IrisStatus::DimMismatch,
        IrisError::EmptyMask => IrisStatus::EmptyMask,
        IrisError::Parse(_) => IrisStatus::Parse,
        IrisError::InvalidArgument(_) => IrisStatus::InvalidArgument,
        _ => IrisStatus::Other,
    }
}

struct Fail(IrisStatus, String);

impl From<IrisError> for Fail {
    fn from(e: IrisError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IrisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IrisStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            IrisStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(IrisStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(IrisStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(IrisStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail(IrisStatus::NullPointer, format!("{name} is null")));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn iris_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn iris_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New context with default settings.
#[no_mangle]
pub extern "C" fn iris_ctx_new() -> *mut IrisCtx {
    let config = RunConfig::default();
    let extractor = Extractor::new(config.eval.features.clone());
    Box::into_raw(Box::new(IrisCtx { config, extractor }))
}

/// # Safety
/// `ctx` must come from [`iris_ctx_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn iris_ctx_free(ctx: *mut IrisCtx) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Set one configuration key (see `irisct keys`).
///
/// # Safety
/// `ctx` must be a live context; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn iris_ctx_set(
    ctx: *mut IrisCtx,
    key: *const c_char,
    value: *const c_char,
) -> IrisStatus {
    guard(|| {
        let ctx = ctx
            .as_mut()
            .ok_or(Fail(IrisStatus::NullPointer, "ctx is null".into()))?;
        let (k, v) = (str_arg(key, "key")?, str_arg(value, "value")?);
        ctx.config.set(k, v)?;
        ctx.extractor.config = ctx.config.eval.features.clone();
        Ok(())
    })
}

/// Load a PCA or ICA basis written by `irisct fit-basis`.
///
/// # Safety
/// `ctx` must be a live context; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn iris_ctx_load_basis(ctx: *mut IrisCtx, path: *const c_char) -> IrisStatus {
    guard(|| {
        let ctx = ctx
            .as_mut()
            .ok_or(Fail(IrisStatus::NullPointer, "ctx is null".into()))?;
        let b = basis_from_records(&read_store(Path::new(str_arg(path, "path")?))?)?;
        match b.kind {
            ProjectionKind::Pca => ctx.extractor.pca = Some(b),
            ProjectionKind::Ica => ctx.extractor.ica = Some(b),
        }
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iris_image_load(
    path: *const c_char,
    out: *mut *mut IrisImage,
) -> IrisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let inner = load_image(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(IrisImage { inner }));
        Ok(())
    })
}

/// Copy an 8-bit gray image, row-major, `width * height` bytes.
///
/// # Safety
/// `pixels` must point to `width * height` readable bytes; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn iris_image_from_gray(
    width: usize,
    height: usize,
    pixels: *const u8,
    out: *mut *mut IrisImage,
) -> IrisStatus {
    guard(|| {
        out_arg(out, "out")?;
        if pixels.is_null() {
            return Err(Fail(IrisStatus::NullPointer, "pixels is null".into()));
        }
        let n = width.checked_mul(height).ok_or(Fail(
            IrisStatus::InvalidArgument,
            "image size overflows".into(),
        ))?;
        let data = std::slice::from_raw_parts(pixels, n).to_vec();
        let inner = GrayImage::new(width, height, data)?;
        *out = Box::into_raw(Box::new(IrisImage { inner }));
        Ok(())
    })
}

/// # Safety
/// `img` must come from an image constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn iris_image_free(img: *mut IrisImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Segment, normalise and extract one template. `method` is a tag such as
/// `"BINARY"` or `"nlac"`.
///
/// # Safety
/// `ctx` and `img` must be live handles; `method` NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn iris_extract(
    ctx: *const IrisCtx,
    img: *const IrisImage,
    method: *const c_char,
    out: *mut *mut IrisTemplate,
) -> IrisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let ctx = ref_arg(ctx, "ctx")?;
        let img = ref_arg(img, "img")?;
        let method: Method = str_arg(method, "method")?.parse()?;
        let strip = image_to_strip(&img.inner, &ctx.config.pipeline)?;
        let inner = ctx.extractor.extract(&strip, method)?;
        *out = Box::into_raw(Box::new(IrisTemplate { inner }));
        Ok(())
    })
}

/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn iris_template_free(t: *mut IrisTemplate) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of elements, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live template.
#[no_mangle]
pub unsafe extern "C" fn iris_template_len(t: *const IrisTemplate) -> usize {
    t.as_ref().map_or(0, |t| t.inner.len())
}

/// # Safety
/// `t` must be a live template; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iris_template_kind(
    t: *const IrisTemplate,
    out: *mut IrisPayloadKind,
) -> IrisStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = match ref_arg(t, "template")?.inner.payload {
            Payload::Reals(_) => IrisPayloadKind::Reals,
            Payload::Bits(_) => IrisPayloadKind::Bits,
            Payload::Trits(_) => IrisPayloadKind::Trits,
            Payload::TritsReals(..) => IrisPayloadKind::TritsReals,
        };
        Ok(())
    })
}

/// Copy the template as reals (bits 0/1, trits −1/0/1) into `buf`.
/// `written` receives the element count; if `cap` is too small nothing is
/// copied and `BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `buf` must hold `cap` writable doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iris_template_copy(
    t: *const IrisTemplate,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> IrisStatus {
    guard(|| {
        out_arg(written, "written")?;
        let v = ref_arg(t, "template")?.inner.payload.to_reals();
        *written = v.len();
        if cap < v.len() {
            return Err(Fail(
                IrisStatus::BufferTooSmall,
                format!("buffer of {cap} for {} values", v.len()),
            ));
        }
        if !v.is_empty() {
            if buf.is_null() {
                return Err(Fail(IrisStatus::NullPointer, "buf is null".into()));
            }
            ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        }
        Ok(())
    })
}

/// Serialise as one template-store line; free with [`iris_string_free`].
///
/// # Safety
/// `t` must be a live template; `subject`, `sample` NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn iris_template_to_record(
    t: *const IrisTemplate,
    subject: *const c_char,
    sample: *const c_char,
    out: *mut *mut c_char,
) -> IrisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let t = ref_arg(t, "template")?;
        let rec = TemplateRecord::new(
            str_arg(subject, "subject")?,
            str_arg(sample, "sample")?,
            t.inner.clone(),
        );
        let line = CString::new(rec.to_line()?).expect("records hold no NUL");
        *out = line.into_raw();
        Ok(())
    })
}

/// Parse one template-store line.
///
/// # Safety
/// `line` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iris_template_from_record(
    line: *const c_char,
    out: *mut *mut IrisTemplate,
) -> IrisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let rec = TemplateRecord::from_line(str_arg(line, "line")?)?;
        *out = Box::into_raw(Box::new(IrisTemplate {
            inner: rec.template,
        }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn iris_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Matcher distance between two templates of the same method (an NLAC
/// template may be compared with a BINARY one).
///
/// # Safety
/// `a`, `b` must be live templates; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iris_distance(
    a: *const IrisTemplate,
    b: *const IrisTemplate,
    out: *mut f64,
) -> IrisStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = template_distance(&ref_arg(a, "a")?.inner, &ref_arg(b, "b")?.inner)?;
        Ok(())
    })
}
