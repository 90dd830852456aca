"""Few-shot relation classifier: cloze-template fine-tuning plus HTTP serving."""
