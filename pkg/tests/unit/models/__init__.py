"""Unit tests for models"""
