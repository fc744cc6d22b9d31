"""Test fixtures and factories"""
