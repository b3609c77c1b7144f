//! Format component catalog, format construction, and prompt rendering.

mod catalog;
mod render;
mod spec;

pub use catalog::{
    Component, ComponentSizes, DescriptorTransform, FormatComponentCatalog, ItemStyle, OptionLabel,
    Wrapper,
};
pub use render::{
    render, PromptText, RenderMode, RenderedPrompt, Renderer, BLOCK_SEPARATOR,
    OUTPUT_FORMAT_ADMONITION,
};
pub use spec::{compositional_split, verify_compositional_split, FormatSpec, OptionFormat};
