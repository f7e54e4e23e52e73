use pyo3::prelude::*;

#[pymodule]
fn skewlab_py(_py: Python<'_>, _m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
