"""PET module, gradient and accounting tests."""
