use serde::{Deserialize, Serialize};

use super::catalog::{FormatComponentCatalog, OptionLabel};
use super::spec::FormatSpec;
use crate::data::{Instance, Task};
use crate::error::{Error, Result};

/// Sentence appended to the task instruction in chat-mode system prompts.
pub const OUTPUT_FORMAT_ADMONITION: &str =
    "PAY ATTENTION TO THE OUTPUT FORMAT -- ONLY OUTPUT THE ANSWER WITHOUT ANY OTHER TEXT, LIKE IN EXAMPLES.";

/// Separator between the instruction, each demonstration and the test instance.
pub const BLOCK_SEPARATOR: &str = "\n\n";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    #[default]
    Completion,
    Chat,
}

/// Prompt body in completion or chat layout.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PromptText {
    Completion { text: String },
    Chat { system: String, user: String },
}

impl PromptText {
    /// Flattened text, system and user parts joined by a blank line.
    pub fn flat(&self) -> String {
        match self {
            Self::Completion { text } => text.clone(),
            Self::Chat { system, user } => format!("{system}{BLOCK_SEPARATOR}{user}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub prompt: PromptText,
    /// One entry per answer class, in the task's label order.
    pub answer_surface_forms: Vec<String>,
    /// Enumeration labels shown next to each option (empty for option-free tasks).
    pub option_labels: Vec<OptionLabel>,
}

/// Renders tasks under a fixed component catalog.
#[derive(Clone, Copy, Debug)]
pub struct Renderer<'a> {
    catalog: &'a FormatComponentCatalog,
}

struct BlockStyle<'a> {
    input_descriptor: String,
    output_descriptor: String,
    separator: &'a str,
    space: &'a str,
    options: Option<Vec<String>>,
}

impl<'a> Renderer<'a> {
    pub fn new(catalog: &'a FormatComponentCatalog) -> Self {
        Self { catalog }
    }

    pub fn catalog(&self) -> &'a FormatComponentCatalog {
        self.catalog
    }

    /// Render demonstrations (each with its gold answer) followed by the test
    /// instance with an empty answer slot.
    pub fn render(
        &self,
        task: &Task,
        instance: &Instance,
        demonstrations: &[Instance],
        format: &FormatSpec,
        mode: RenderMode,
    ) -> Result<RenderedPrompt> {
        format.validate(self.catalog)?;
        match (&task.options, format.options) {
            (Some(_), None) => {
                return Err(Error::FormatMismatch(format!(
                    "task {} has options but the format sets no option components",
                    task.id
                )))
            }
            (None, Some(_)) => {
                return Err(Error::FormatMismatch(format!(
                    "task {} has no options; option-bearing formats are rejected",
                    task.id
                )))
            }
            _ => {}
        }

        let labels = task.labels();
        let mut option_labels = Vec::new();
        let mut option_fields = None;
        if let (Some(options), Some(opt_format)) = (&task.options, format.options) {
            if let Some(i) = options.iter().position(|o| o.is_empty()) {
                return Err(Error::Render(format!(
                    "task {}: option {i} has no text",
                    task.id
                )));
            }
            option_labels = self.catalog.option_labels(
                opt_format.item_style,
                opt_format.item_wrapper,
                options.len(),
            )?;
            let text_sep =
                self.catalog.text_option_separators()[opt_format.text_option_separator].as_str();
            let fields = option_labels
                .iter()
                .zip(options)
                .map(|(label, option)| format!("{}{}{}", label.wrapped, text_sep, option))
                .collect();
            option_fields = Some(fields);
        }
        for demo in demonstrations {
            if !labels.contains(&demo.gold) {
                return Err(Error::Render(format!(
                    "demonstration {} answer {:?} is not a class of task {}",
                    demo.uid, demo.gold, task.id
                )));
            }
        }

        let transform = self.catalog.descriptor_transforms()[format.descriptor_transform];
        let style = BlockStyle {
            input_descriptor: transform.apply(&task.descriptors.input),
            output_descriptor: transform.apply(&task.descriptors.output),
            separator: &self.catalog.separators()[format.separator],
            space: &self.catalog.spaces()[format.space],
            options: option_fields,
        };

        let mut blocks: Vec<String> = demonstrations
            .iter()
            .map(|demo| style.block(&demo.input, &demo.gold))
            .collect();
        blocks.push(style.block(&instance.input, ""));
        let body = blocks.join(BLOCK_SEPARATOR);

        let prompt = match mode {
            RenderMode::Completion if task.instruction.is_empty() => {
                PromptText::Completion { text: body }
            }
            RenderMode::Completion => PromptText::Completion {
                text: format!("{}{BLOCK_SEPARATOR}{body}", task.instruction),
            },
            RenderMode::Chat => {
                let system = if task.instruction.is_empty() {
                    OUTPUT_FORMAT_ADMONITION.to_string()
                } else {
                    format!("{}\n{OUTPUT_FORMAT_ADMONITION}", task.instruction)
                };
                PromptText::Chat { system, user: body }
            }
        };
        Ok(RenderedPrompt {
            prompt,
            answer_surface_forms: labels,
            option_labels,
        })
    }
}

impl BlockStyle<'_> {
    fn block(&self, input: &str, answer: &str) -> String {
        let mut fields = vec![format!(
            "{}{}{}",
            self.input_descriptor, self.separator, input
        )];
        if let Some(options) = &self.options {
            fields.extend(options.iter().cloned());
        }
        fields.push(format!(
            "{}{}{}",
            self.output_descriptor, self.separator, answer
        ));
        fields.join(self.space)
    }
}

/// Convenience wrapper around [`Renderer::render`].
pub fn render(
    catalog: &FormatComponentCatalog,
    task: &Task,
    instance: &Instance,
    demonstrations: &[Instance],
    format: &FormatSpec,
    mode: RenderMode,
) -> Result<RenderedPrompt> {
    Renderer::new(catalog).render(task, instance, demonstrations, format, mode)
}
