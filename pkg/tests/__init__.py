# Tests for the gender-hint translation toolkit
